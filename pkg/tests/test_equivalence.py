import itertools
import random
from functools import lru_cache

import pytest

from generators import duplicate, mutate, random_recursive
from helpers import load
from shades.analysis import check_formation
from shades.automata import run
from shades.core import END
from shades.equivalence import IllFormed, Outcome, dual_check, equiv, to_machine
from shades.semantics import parse_symbol, unfold_traces
from shades.surface import parse_system, print_system

Y_IN = parse_system("system recursive\ntype t = Y\nY = ?end.Y\n")
END_SYS = parse_system("system finite\ntype t = end\n")
PAIRABLE = ["appd", "counter", "dump", "iter", "kh", "loop", "loop2", "meta", "meta_cf", "nest", "tree"]


def test_loop_vs_loop2_is_exact():
    assert equiv(load("loop"), None, load("loop2"), None).outcome is Outcome.EQUIVALENT


def test_renamed_label_differs_at_length_one():
    counter = load("counter")
    renamed = parse_system(print_system(counter).replace("dump", "dmp"))
    r = equiv(counter, None, renamed, None)
    assert r.outcome is Outcome.NOT_EQUIVALENT
    assert len(r.witness) == 1
    assert r.witness == (parse_symbol("&[inc,dmp]:dmp"),)


def test_end_vs_end():
    assert equiv(END_SYS, END, END_SYS, END).outcome is Outcome.EQUIVALENT


def test_meta_vs_converted_nest_is_bounded():
    from shades.transform import nested_to_pushdown

    r = equiv(load("meta"), None, nested_to_pushdown(load("nest")), None, 12)
    assert r.outcome is Outcome.EQUIVALENT_UP_TO and r.depth == 12


def test_dual_check_examples():
    assert dual_check(load("loop"), None, Y_IN, None).outcome is Outcome.EQUIVALENT
    assert dual_check(END_SYS, None, END_SYS, None).outcome is Outcome.EQUIVALENT
    r = dual_check(load("loop"), None, load("loop"), None)
    assert r.outcome is Outcome.NOT_EQUIVALENT
    assert r.witness in (("!c",), ("!d",), ("?c",), ("?d",))


def test_ill_formed_side_is_reported():
    with pytest.raises(IllFormed):
        equiv(load("bad_cycle"), None, load("loop"), None)


def test_two_counter_is_always_bounded():
    r = equiv(load("iter"), None, load("iter"), None, 6)
    assert r.outcome is Outcome.EQUIVALENT_UP_TO


def test_closed_pushdown_space_is_exact():
    sys = parse_system("system pushdown\nstack a\ntype t = X(a)\nX(eps) = end\nX(a S) = !end.X(S)\n")
    other = parse_system("system recursive\ntype t = X\nX = !end.Y\nY = end\n")
    assert equiv(sys, None, other, None).outcome is Outcome.EQUIVALENT


@lru_cache(maxsize=None)
def traces(name, depth=8):
    return frozenset(unfold_traces(load(name), max_len=depth))


@pytest.mark.parametrize("a,b", list(itertools.combinations_with_replacement(PAIRABLE, 2)))
def test_agrees_with_oracle(a, b):
    r = equiv(load(a), None, load(b), None, 8)
    if r.outcome is Outcome.NOT_EQUIVALENT:
        w = r.witness
        ta, tb = unfold_traces(load(a), max_len=len(w)), unfold_traces(load(b), max_len=len(w))
        assert (w in ta) != (w in tb)
        assert (w in ta) == (r.accepted_by == "left")
    else:
        assert traces(a) == traces(b)


def _recursive_pair(seed):
    rng = random.Random(seed)
    while True:
        sys = random_recursive(rng, rng.randint(1, 5), trivial=0.0)
        if check_formation(sys).ok:
            break
    other = duplicate(sys)
    if seed % 2:
        other = mutate(rng, other)
    return sys, other


@pytest.mark.parametrize("seed", range(30))
def test_recursive_pairs_are_exact_and_sound(seed):
    a, b = _recursive_pair(seed)
    r = equiv(a, None, b, None, 3)
    assert r.outcome is not Outcome.EQUIVALENT_UP_TO
    if r.outcome is Outcome.NOT_EQUIVALENT:
        ma, mb = to_machine(a), to_machine(b)
        assert run(ma, r.witness) != run(mb, r.witness)


@pytest.mark.parametrize("fuel", [2, 4, 8, 12])
def test_witness_is_stable_under_more_fuel(fuel):
    counter = load("counter")
    other = parse_system(print_system(counter).replace("Y(s N) = !end", "Y(s N) = ?end"))
    r = equiv(counter, None, other, None, fuel)
    if fuel >= 4:
        assert r.outcome is Outcome.NOT_EQUIVALENT
        assert r.witness == equiv(counter, None, other, None, 20).witness
    else:
        assert r.outcome is Outcome.EQUIVALENT_UP_TO
