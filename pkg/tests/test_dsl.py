from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from uig.errors import DSLSyntaxError, VocabularyError
from uig.sim import vocab
from uig.sim.dsl import (Color, ConstraintSet, Count, Not, Rel, Style, parse_prompt_dsl,
                         read_prompt_file, try_parse_prompt_dsl)

nouns = st.sampled_from(vocab.NOUNS)
atoms = st.one_of(
    st.builds(Count, nouns, st.integers(0, vocab.MAX_COUNT)),
    st.builds(Color, nouns, st.sampled_from(vocab.COLORS)),
    st.builds(Rel, nouns, st.sampled_from(vocab.RELATIONS), nouns),
    st.builds(Style, st.sampled_from(vocab.STYLES), nouns),
)
constraints = st.one_of(atoms, st.builds(Not, atoms))
constraint_sets = st.lists(constraints, min_size=1, max_size=6, unique=True).map(
    lambda cs: ConstraintSet(tuple(cs)))


def test_two_clause_prompt():
    cs = parse_prompt_dsl("count(balloon,4); color(balloon,black)")
    assert cs.constraints == (Count("balloon", 4), Color("balloon", "black"))


def test_relation_clause():
    assert parse_prompt_dsl("rel(cup,behind,woman)").constraints == (Rel("cup", "behind", "woman"),)


def test_whitespace_insensitive():
    a = parse_prompt_dsl("  count ( ball , 2 ) ;\n style( wooden ,stool )  ")
    assert a == parse_prompt_dsl("count(ball,2);style(wooden,stool)")


def test_negation():
    cs = parse_prompt_dsl("not(color(cat,red))")
    assert cs.constraints == (Not(Color("cat", "red")),)


def test_empty_argument_is_syntax_error_at_its_position():
    with pytest.raises(DSLSyntaxError) as exc:
        parse_prompt_dsl("count(balloon, )")
    assert exc.value.line == 1
    assert exc.value.column == 16


def test_error_position_on_later_line():
    with pytest.raises(DSLSyntaxError) as exc:
        parse_prompt_dsl("count(ball,1);\n  color(ball red)")
    assert exc.value.line == 2
    assert exc.value.column == 14


@pytest.mark.parametrize("text", [
    "count(unicorn,2)", "color(ball,teal)", "rel(cup,beside,woman)", "style(velvet,cup)",
])
def test_unknown_vocabulary(text):
    with pytest.raises(VocabularyError):
        parse_prompt_dsl(text)


@pytest.mark.parametrize("text", [
    "", "   ", "count(ball,2);", "; count(ball,2)", "count(ball,2) count(ball,3)",
    "not(not(count(ball,1)))", "count(ball,2); count(ball,2)", "count(ball,-1)",
    "count(ball,999)", "count(ball)", "hello world",
])
def test_rejected_prompts(text):
    with pytest.raises((DSLSyntaxError, VocabularyError)):
        parse_prompt_dsl(text)
    assert try_parse_prompt_dsl(text) is None


@given(constraint_sets)
def test_parse_render_round_trip(cs):
    assert parse_prompt_dsl(cs.render()) == cs


@given(constraint_sets)
def test_render_parse_render_is_identity_on_canonical_text(cs):
    text = cs.render()
    assert parse_prompt_dsl(text).render() == text


def test_nouns_in_order_of_first_mention():
    cs = parse_prompt_dsl("rel(cup,on,desk); count(cat,1); color(cup,red)")
    assert cs.nouns() == ("cup", "desk", "cat")


def test_prompt_file(tmp_path):
    p = tmp_path / "prompts.txt"
    p.write_text("# suite\ncount(ball,2)\n\ncolor(cat,red); rel(cat,on,desk)  # trailing\n")
    sets = read_prompt_file(p)
    assert [len(s) for s in sets] == [1, 2]


def test_prompt_file_error_names_line(tmp_path):
    p = tmp_path / "prompts.txt"
    p.write_text("count(ball,2)\ncount(ball,\n")
    with pytest.raises(DSLSyntaxError) as exc:
        read_prompt_file(p)
    assert exc.value.line == 2
