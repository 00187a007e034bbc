from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from uig.errors import EditScriptError
from uig.sim import vocab
from uig.sim.edits import (Add, EditScript, Remove, SetColor, SetCount, SetRel, SetStyle,
                           parse_op, salvage)

nouns = st.sampled_from(vocab.NOUNS)
ops = st.one_of(
    st.builds(Add, nouns, st.one_of(st.none(), st.sampled_from(vocab.COLORS))),
    st.builds(Remove, nouns, st.one_of(st.none(), st.integers(1, 500))),
    st.builds(SetColor, nouns, st.sampled_from(vocab.COLORS)),
    st.builds(SetStyle, nouns, st.one_of(st.none(), st.sampled_from(vocab.STYLES))),
    st.builds(SetRel, nouns, st.sampled_from(vocab.RELATIONS), nouns),
    st.builds(SetCount, nouns, st.integers(0, vocab.MAX_COUNT)),
)
scripts = st.lists(ops, min_size=1, max_size=6).map(lambda xs: EditScript(tuple(xs)))


@given(scripts)
def test_round_trip(script):
    assert EditScript.parse(script.render()) == script
    assert EditScript.parse(script.render()).render() == script.render()


def test_canonical_rendering():
    s = EditScript((SetColor("balloon", "black"), Add("banana", "yellow"),
                    SetRel("cup", "behind", "woman"), Remove("ball", 3), SetStyle("cup", None)))
    assert s.render() == ("SET_COLOR(balloon,black); ADD(banana,yellow); "
                          "SET_REL(cup,behind,woman); REMOVE(ball#3); SET_STYLE(cup,none)")


def test_op_names_are_case_insensitive():
    assert parse_op("set_color( cup , red )") == SetColor("cup", "red")


def test_empty_script_rejected():
    with pytest.raises(ValueError):
        EditScript(())
    with pytest.raises(EditScriptError):
        EditScript.parse("  ")


@pytest.mark.parametrize("text", [
    "ADD(unicorn)", "SET_COLOR(cup)", "SET_REL(cup,beside,woman)", "SET_COUNT(cup,x)",
    "FLY(cup)", "REMOVE(ball#x)", "SET_STYLE(cup,velvet)", "ADD(cup); ", "add a cup",
])
def test_invalid_scripts(text):
    with pytest.raises(EditScriptError):
        EditScript.parse(text)


@pytest.mark.parametrize("text,expected", [
    ("ADD ball", Add("ball")),
    ("Please ADD(ball, red) and make it shiny", Add("ball", "red")),
    ("then set_color cup green", SetColor("cup", "green")),
    ("first FLY(ball), then REMOVE(cup)", Remove("cup")),
    ("ADD(unicorn) or ADD(cat)", Add("cat")),
])
def test_salvage_finds_first_valid_op(text, expected):
    assert salvage(text) == EditScript((expected,))


@pytest.mark.parametrize("text", ["make it nicer", "count(ball,2); color(ball,red)", ""])
def test_salvage_gives_up(text):
    assert salvage(text) is None
