"""Backends implementing the generate / understand / edit contract."""

from .base import CountingBackend, UnifiedModelBackend, derive_seed
from .http import BackendEndpoint, HttpBackend
from .sim import SimulatorBackend

__all__ = ["BackendEndpoint", "CountingBackend", "HttpBackend", "SimulatorBackend",
           "UnifiedModelBackend", "derive_seed"]
