from __future__ import annotations

import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uig.backends.sim import SimulatorBackend  # noqa: E402
from uig.sim.world import NoiseConfig  # noqa: E402

_CRITERIA: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.passed else "FAIL"
        _CRITERIA[n] = (status, title, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, title, duration = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title} ({duration:.1f}s)")


@pytest.fixture
def sim():
    return SimulatorBackend(NoiseConfig(p_violate=0.5))


@pytest.fixture
def perfect_sim():
    return SimulatorBackend(NoiseConfig(p_violate=0.0))


@pytest.fixture
def stopwatch():
    start = time.perf_counter()
    return lambda: time.perf_counter() - start
