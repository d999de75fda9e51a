import pytest

from helpers import load, load_aut
from shades.automata import (
    Diverge,
    NonContractive,
    PreconditionBreach,
    check_loop_free,
    check_normal_form_bounded,
    eliminate_epsilon_fsa,
    enumerate_accepted,
    is_obviously_prefix_closed,
    run,
    to_obviously_prefix_closed,
)
from shades.compiler import compile_raw, compile_system, normalize
from shades.semantics import parse_symbol, parse_word, unfold_traces
from shades.surface import parse_automaton, parse_system

INC, DUMP = parse_symbol("&[inc,dump]:inc"), parse_symbol("&[inc,dump]:dump")


def fsa(*lines, accepting=None, states=None):
    states = states or sorted({w for line in lines for w in (line.split(",")[0], line.split(",")[-1].strip())})
    accepting = states if accepting is None else accepting
    head = ["automaton fsa", "states " + " ".join(states), "initial " + states[0], "accepting " + " ".join(accepting)]
    return parse_automaton("\n".join(head + list(lines)) + "\n")


def test_run_loop_figure():
    aut = load_aut("loop_fig")
    assert run(aut, parse_word("!c !d end"))
    assert not run(aut, parse_word("?d"))


def test_run_counter_figure():
    aut = load_aut("counter_fig")
    assert run(aut, (INC, DUMP, "!c"))
    assert not run(aut, (INC, DUMP, "!c", "!c"))


def test_run_diverges_on_epsilon_cycle():
    aut = fsa("qa, *, eps -> =, qb", "qb, *, eps -> =, qa")
    with pytest.raises(Diverge):
        run(aut, ())


def test_enumerate_loop_matches_unfolding():
    assert enumerate_accepted(load_aut("loop_fig"), 3) == unfold_traces(load("loop"), max_len=3)


def test_enumerate_meta_figure_depth_two():
    words = enumerate_accepted(load_aut("meta_fig"), 2)
    out, inn = parse_symbol("&[addOut,addIn]:addOut"), parse_symbol("&[addOut,addIn]:addIn")
    firsts = {w for w in words if len(w) == 1}
    assert firsts == {(out,), (inn,)}
    assert all(w[0] in (out, inn) for w in words if w)
    assert len([w for w in words if len(w) == 2]) == 6


def test_nothing_accepted_when_initial_rejects():
    aut = fsa("qa, *, end -> =, qb", accepting=["qb"])
    assert enumerate_accepted(aut, 3) == {("end",)}


def test_loop_free_compile():
    assert check_loop_free(compile_system(load("loop"))).ok
    assert check_loop_free(compile_system(load("counter"))).ok


def test_loop_free_cycle_witness():
    sys = parse_system("system recursive\ntype t = X\nX = Y\nY = X\n", validate=True)
    v = check_loop_free(compile_raw(normalize(sys)))
    assert not v.ok
    assert v.witness[0] == v.witness[-1] and set(v.witness) == {"q_X", "q_Y"}


def test_eliminate_epsilon_reroutes():
    aut = fsa("qa, *, !c -> =, qx", "qx, *, eps -> =, qy", "qy, *, !d -> =, qend")
    out = eliminate_epsilon_fsa(aut)
    assert "qx" not in out.states
    assert out.transitions[("qa", None, "!c")] == ("=", "qy")
    assert enumerate_accepted(out, 4) == enumerate_accepted(aut, 4)


def test_eliminate_epsilon_identity():
    aut = load_aut("loop_fig")
    assert eliminate_epsilon_fsa(aut).transitions == aut.transitions


def test_eliminate_epsilon_self_loop():
    aut = fsa("qa, *, !c -> =, qx", "qx, *, eps -> =, qx")
    out = eliminate_epsilon_fsa(aut)
    assert "qx" in out.states
    assert not any(q == "qx" for q, _, _ in out.transitions)


def test_eliminate_epsilon_cycle():
    aut = fsa("qa, *, eps -> =, qb", "qb, *, eps -> =, qa")
    with pytest.raises(NonContractive):
        eliminate_epsilon_fsa(aut)


def test_normal_form_loop():
    assert check_normal_form_bounded(compile_system(load("loop")), 6).ok


def test_normal_form_late_acceptance():
    aut = fsa("qa, *, !d -> =, qr", "qr, *, eps -> =, qb", accepting=["qa", "qb"], states=["qa", "qr", "qb"])
    v = check_normal_form_bounded(aut, 4)
    assert v.reason == "immediate acceptance" and v.witness == ("!d",)


def test_normal_form_epsilon_loop():
    aut = fsa("qa, *, !d -> =, qb", "qb, *, eps -> =, qc", "qc, *, eps -> =, qb")
    v = check_normal_form_bounded(aut, 4)
    assert v.reason == "guaranteed to read"


def test_obviously_prefix_closed():
    assert is_obviously_prefix_closed(compile_system(load("counter")))
    two = fsa("qa, *, !d -> =, qb", accepting=["qa"], states=["qa", "qb", "qc"])
    assert not is_obviously_prefix_closed(two)
    escaping = fsa("qa, *, !d -> =, qb", "qb, *, !c -> =, qa", accepting=["qa"])
    assert not is_obviously_prefix_closed(escaping)


def test_to_obviously_prefix_closed():
    aut = fsa(
        "qa, *, !d -> =, qb", "qa, *, !c -> =, qr", "qa, *, ?c -> =, qr2", "qb, *, end -> =, qc",
        accepting=["qa", "qb", "qc"], states=["qa", "qb", "qc", "qr", "qr2"],
    )
    assert not is_obviously_prefix_closed(aut)
    out = to_obviously_prefix_closed(aut)
    assert is_obviously_prefix_closed(out)
    assert enumerate_accepted(out, 6) == enumerate_accepted(aut, 6) == {(), ("!d",), ("!d", "end")}


def test_to_obviously_prefix_closed_idempotent():
    aut = load_aut("meta_fig")
    assert enumerate_accepted(to_obviously_prefix_closed(aut), 6) == enumerate_accepted(aut, 6)


def test_to_obviously_prefix_closed_rejects_missing_prefixes():
    aut = fsa("qa, *, !d -> =, qb", "qb, *, end -> =, qc", accepting=["qc"], states=["qa", "qb", "qc"])
    with pytest.raises(PreconditionBreach):
        to_obviously_prefix_closed(aut)
