import random

import pytest

from generators import random_onecounter, random_pushdown, random_recursive
from helpers import CONTRACTIVE, load
from shades.analysis import (
    check_contractive,
    check_contractive_bounded,
    check_contractive_cf,
    check_formation,
    is_terminated,
    trivial_rewrites,
)
from shades.core import SKIP, Call, MsgCF, Nat, Polarity, Seq, SystemClass, Word
from shades.semantics import NonContractiveLoop, UnfoldError, unfold_traces
from shades.surface import parse_system


def test_cycle_witness():
    v = check_contractive(load("bad_cycle"))
    assert not v.ok
    assert v.witness == ("X", "Y", "Z", "X")


def test_loop_is_contractive():
    assert check_contractive(load("loop")).ok


def test_counter_cycle_has_growing_witness():
    v = check_contractive(load("bad_counter"))
    assert not v.ok
    assert ("X", "s") in v.bad
    assert v.witness[0] == "X(s z)"


@pytest.mark.parametrize("name", ["bad_cf_left", "bad_cf_right"])
def test_cf_cycles(name):
    v = check_contractive_cf(load(name))
    assert not v.ok and v.witness == ("X",)


def test_tree_is_contractive():
    assert check_contractive_cf(load("tree")).ok


def test_is_terminated():
    sys = load("tree")
    assert is_terminated(sys, SKIP)
    assert is_terminated(sys, Seq(SKIP, SKIP))
    assert not is_terminated(sys, MsgCF(Polarity.OUT, SKIP))
    assert not is_terminated(sys, Call("X"))


def test_iter_bounded_ok():
    v = check_contractive_bounded(load("iter"))
    assert v.ok


def test_two_counter_self_loop_fails():
    sys = parse_system("system twocounter\ntype t = X(z, z)\nX(z, N2) = X(z, N2)\nX(s N, N2) = end\n")
    v = check_contractive_bounded(sys)
    assert v.status == "fail"
    assert v.witness[0] == v.witness[-1]


GROWING = "system twocounter\ntype t = X(z, z)\nX(N, z) = X(s N, z)\nX(N, s M) = end\n"


def test_two_counter_growth_is_unknown():
    v = check_contractive_bounded(parse_system(GROWING), fuel=1000)
    assert v.status == "unknown"
    assert v.fuel == 1000


@pytest.mark.parametrize("fuel", [10, 100, 1000, 5000])
def test_bounded_verdicts_are_monotone(fuel):
    assert check_contractive_bounded(load("iter"), fuel=max(fuel, 50)).ok
    assert check_contractive_bounded(parse_system(GROWING), fuel=fuel).status == "unknown"


def test_formation_counter():
    assert check_formation(load("counter")).ok


def test_formation_unreachable_bad_identifier():
    sys = load("grow")
    assert not check_contractive(sys).ok
    assert check_formation(sys).ok


def test_formation_reachable_bad_identifier():
    sys = load("grow")
    v = check_formation(sys, Call("X", Nat(1)))
    assert not v.ok
    word, state = v.witness
    assert word == () and state == "q_X"


def test_formation_on_nested_and_cf():
    assert check_formation(load("nest")).ok
    assert check_formation(load("appd")).ok
    assert not check_formation(load("bad_cf_left")).ok


@pytest.mark.parametrize("name", CONTRACTIVE)
def test_named_examples_are_types(name):
    assert check_contractive(load(name)).ok
    assert check_formation(load(name)).ok


def _seeds(sys):
    if sys.cls is SystemClass.ONE_COUNTER:
        params = [Nat(0), Nat(1)]
    elif sys.cls is SystemClass.PUSHDOWN:
        params = [Word()] + [Word((s,)) for s in sys.stack]
    else:
        params = [None]
    return [Call(x, p) for x in sys.ctors for p in params]


def _oracle_contractive(sys) -> bool:
    for seed in _seeds(sys):
        try:
            unfold_traces(sys, seed, max_len=1)
        except NonContractiveLoop:
            return False
    return True


@pytest.mark.parametrize("name", ["bad_counter", "bad_cycle", "counter", "grow", "kh", "loop", "meta"])
def test_agrees_with_unfolding_oracle(name):
    sys = load(name)
    assert check_contractive(sys).ok == _oracle_contractive(sys)


def _generated(seed):
    rng = random.Random(seed)
    kind = seed % 3
    n = rng.randint(1, 5)
    if kind == 0:
        return random_recursive(rng, n, trivial=0.5)
    if kind == 1:
        return random_onecounter(rng, n, trivial=0.6)
    return random_pushdown(rng, n, rng.randint(1, 3), trivial=0.6)


@pytest.mark.parametrize("seed", range(150))
def test_generated_agree_with_oracle(seed):
    sys = _generated(seed)
    assert check_contractive(sys).ok == _oracle_contractive(sys)


@pytest.mark.parametrize("seed", range(60))
def test_formation_implies_unfolding(seed):
    sys = _generated(seed)
    if check_formation(sys).ok:
        unfold_traces(sys, max_len=5)
    else:
        with pytest.raises(UnfoldError):
            unfold_traces(sys, max_len=40)


def test_rewrite_steps_are_counted():
    engine = trivial_rewrites(load("meta"))
    assert engine.steps > 0
