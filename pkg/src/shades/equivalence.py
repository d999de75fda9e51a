"""Trace equivalence and duality of types through their automata.

Finite-state pairs are decided exactly with a union-find product walk.
Anything with unbounded memory is explored breadth-first over pairs of
configurations: a difference yields the shortest witness, a closed pair
space proves equivalence, and running out of fuel reports equivalence up
to the explored word length.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .analysis import check_formation
from .automata import Automaton, Model, run
from .compiler import compile_system
from .core import EquationSystem, ShadesError, SystemClass, TypeExpr
from .transform import cf_to_pushdown, dualize, nested_to_pushdown

DEFAULT_FUEL = 12


def default_fuel() -> int:
    value = os.environ.get("SHADES_FUEL")
    return int(value) if value else DEFAULT_FUEL


class IllFormed(ShadesError):
    def __init__(self, side: str, verdict):
        super().__init__(f"{side} side is not a type: {verdict.reason}")
        self.side = side
        self.verdict = verdict


class Outcome(str, Enum):
    EQUIVALENT = "Equivalent"
    NOT_EQUIVALENT = "NotEquivalent"
    EQUIVALENT_UP_TO = "EquivalentUpTo"


@dataclass(frozen=True)
class EquivResult:
    outcome: Outcome
    witness: tuple[str, ...] | None = None
    accepted_by: str | None = None  # "left" or "right", for NotEquivalent
    depth: int | None = None  # for EquivalentUpTo

    @property
    def equivalent(self) -> bool:
        return self.outcome is Outcome.EQUIVALENT

    def __str__(self) -> str:
        if self.outcome is Outcome.EQUIVALENT_UP_TO:
            return f"EquivalentUpTo({self.depth})"
        return self.outcome.value


def to_machine(sys: EquationSystem) -> Automaton:
    """Compile any system, routing context-free and nested ones via pushdown."""
    if sys.cls is SystemClass.CONTEXT_FREE:
        sys = cf_to_pushdown(sys)
    elif sys.cls is SystemClass.NESTED:
        sys = nested_to_pushdown(sys)
    return compile_system(sys)


def _settle(aut: Automaton, config):
    """Acceptance flag and reading configuration (None for the sink)."""
    if config is None:
        return False, None
    return aut.eps_path(config)


def _successor(aut: Automaton, config, sym):
    if config is None:
        return False, None
    return _settle(aut, aut.step(config, sym))


def _alphabet(a: Automaton, b: Automaton) -> tuple[str, ...]:
    return tuple(sorted(set(a.alphabet()) | set(b.alphabet())))


def product_bfs(a: Automaton, b: Automaton, fuel: int | None) -> EquivResult:
    """Breadth-first search over configuration pairs, up to ``fuel`` symbols.

    ``fuel=None`` means unbounded and only terminates on finite pair spaces.
    """
    alphabet = _alphabet(a, b)
    start = (_settle(a, a.start), _settle(b, b.start))
    seen = {start}
    queue = deque([((), start)])
    truncated = False
    while queue:
        word, ((acc_a, ca), (acc_b, cb)) = queue.popleft()
        if acc_a != acc_b:
            return EquivResult(Outcome.NOT_EQUIVALENT, word, "left" if acc_a else "right")
        if ca is None and cb is None:
            continue
        if fuel is not None and len(word) >= fuel:
            truncated = True
            continue
        for sym in alphabet:
            pair = (_successor(a, ca, sym), _successor(b, cb, sym))
            if pair not in seen:
                seen.add(pair)
                queue.append((word + (sym,), pair))
    if truncated:
        return EquivResult(Outcome.EQUIVALENT_UP_TO, depth=fuel)
    return EquivResult(Outcome.EQUIVALENT)


def _union_find_equal(a: Automaton, b: Automaton) -> bool:
    """Hopcroft and Karp's near-linear check for finite-state machines."""
    alphabet = _alphabet(a, b)
    parent: dict = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    todo = [(("A",) + _settle(a, a.start), ("B",) + _settle(b, b.start))]
    while todo:
        x, y = todo.pop()
        rx, ry = find(x), find(y)
        if rx == ry:
            continue
        if x[1] != y[1]:
            return False
        parent[rx] = ry
        for sym in alphabet:
            todo.append((("A",) + _successor(a, x[2], sym), ("B",) + _successor(b, y[2], sym)))
    return True


def equiv_machines(a: Automaton, b: Automaton, fuel: int | None = None) -> EquivResult:
    fuel = default_fuel() if fuel is None else fuel
    if a.model is Model.FSA and b.model is Model.FSA:
        if _union_find_equal(a, b):
            return EquivResult(Outcome.EQUIVALENT)
        return product_bfs(a, b, None)
    result = product_bfs(a, b, fuel)
    if Model.TWO_COUNTER in (a.model, b.model) and result.outcome is Outcome.EQUIVALENT:
        return EquivResult(Outcome.EQUIVALENT_UP_TO, depth=fuel)
    return result


def _machine(sys: EquationSystem, expr: TypeExpr | None, side: str) -> Automaton:
    if expr is not None:
        sys = sys.with_root(expr)
    verdict = check_formation(sys)
    if not verdict.ok:
        raise IllFormed(side, verdict)
    return to_machine(sys)


def equiv(
    sys_a: EquationSystem,
    expr_a: TypeExpr | None,
    sys_b: EquationSystem,
    expr_b: TypeExpr | None,
    fuel: int | None = None,
) -> EquivResult:
    """Compare the traces of two types; ``None`` expressions mean the roots."""
    a = _machine(sys_a, expr_a, "left")
    b = _machine(sys_b, expr_b, "right")
    result = equiv_machines(a, b, fuel)
    if result.witness is not None:
        assert run(a, result.witness) != run(b, result.witness)
    return result


def dual_check(
    sys_a: EquationSystem,
    expr_a: TypeExpr | None,
    sys_b: EquationSystem,
    expr_b: TypeExpr | None,
    fuel: int | None = None,
) -> EquivResult:
    """Whether the second type is the dual of the first."""
    if expr_a is not None:
        sys_a = sys_a.with_root(expr_a)
    verdict = check_formation(sys_a)
    if not verdict.ok:
        raise IllFormed("left", verdict)
    return equiv(dualize(sys_a), None, sys_b, expr_b, fuel)
