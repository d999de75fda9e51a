import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ALL, load, load_aut
from shades import corpus_text
from shades.automata import Model, Nondeterministic
from shades.core import Call, Msg, Nat, SystemClass, ValidationError, Word
from shades.surface import (
    ParseError,
    parse_automaton,
    parse_expr,
    parse_system,
    print_automaton,
    print_expr,
    print_system,
)

LOOP = "system recursive\ntype loop = X\nX = !end.X\n"


def test_parse_loop():
    sys = parse_system(LOOP)
    assert sys.cls is SystemClass.RECURSIVE
    assert sys.root == Call("X")
    assert sys.equations[0].body == Msg("!", parse_expr("end", sys), Call("X"))


def test_print_loop_is_canonical():
    assert print_system(parse_system(LOOP)) == LOOP


def test_meta_has_three_equations():
    sys = load("meta")
    assert sys.stack == ("a", "b")
    assert [e.pattern for e in sys.equations] == [Word(), Word(("a",), "S"), Word(("b",), "S")]


def test_counter_prints_z_before_s():
    lhs = [line.split(" = ")[0] for line in print_system(load("counter")).splitlines()[2:]]
    assert lhs == ["X(z)", "X(s N)", "Y(z)", "Y(s N)"]


def test_nested_prints_arities():
    text = print_system(load("nest"))
    assert "Xout(a) = " in text and "Xe = " in text


def test_trailing_open_paren_is_reported_at_the_paren():
    text = "system onecounter\ntype t = X(z)\nX(s N) = Y(\n"
    with pytest.raises(ParseError) as err:
        parse_system(text)
    span = err.value.span
    assert text[span.start : span.end] == "("
    assert (span.line, span.col) == (3, 11)


def test_error_span_on_bad_token():
    with pytest.raises(ParseError) as err:
        parse_system("system recursive\ntype t = X\nX = !end.$\n")
    assert err.value.span.line == 3


def test_unknown_class():
    with pytest.raises(ParseError):
        parse_system("system cubic\ntype t = end\n")


def test_validation_errors_surface():
    with pytest.raises(ValidationError):
        parse_system("system recursive\ntype t = X\nX = Y\n")


@pytest.mark.parametrize("name", ALL)
def test_roundtrip_corpus(name):
    sys = load(name)
    assert parse_system(print_system(sys)) == sys


def test_parse_expr_against_system():
    sys = load("counter")
    assert parse_expr("X(s s z)", sys) == Call("X", Nat(2))
    assert print_expr(Call("X", Nat(2))) == "X(s s z)"


def test_loop_figure_automaton():
    aut = load_aut("loop_fig")
    assert aut.model is Model.FSA
    assert len(aut.states) == 3


def test_counter_figure_automaton():
    aut = load_aut("counter_fig")
    assert aut.model is Model.ONE_COUNTER
    assert len(aut.states) == 4


def test_duplicate_rule_is_nondeterministic():
    text = "automaton fsa\nstates q\ninitial q\naccepting q\nq, *, end -> =, q\nq, *, end -> =, q\n"
    with pytest.raises(Nondeterministic):
        parse_automaton(text)


@pytest.mark.parametrize("name", ["loop_fig", "counter_fig", "meta_fig"])
def test_automaton_roundtrip(name):
    aut = load_aut(name)
    again = parse_automaton(print_automaton(aut))
    assert print_automaton(again) == print_automaton(aut)


SEEDS = [corpus_text(f"{n}.st") for n in ALL]
PIECES = ["system", "type", "stack", "=", "(", ")", "{", "}", ",", ":", ";", ".", "?", "!", "&", "+",
          "end", "skip", "eps", "s", "z", "N", "S", "X", "a", "\n", " ", "#"]


@st.composite
def mangled(draw):
    text = draw(st.sampled_from(SEEDS))
    for _ in range(draw(st.integers(0, 4))):
        i = draw(st.integers(0, len(text)))
        j = draw(st.integers(i, min(len(text), i + 6)))
        text = text[:i] + draw(st.sampled_from(PIECES + [""])) + text[j:]
    return text


@settings(max_examples=300, deadline=None)
@given(st.one_of(mangled(), st.lists(st.sampled_from(PIECES)).map(" ".join), st.text(max_size=40)))
def test_parsing_is_total(text):
    try:
        parse_system(text)
    except (ParseError, ValidationError):
        pass
