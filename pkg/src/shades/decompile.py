"""Turn an obviously prefix-closed automaton back into an equation system.

Each accepting state ``q`` becomes a constructor ``X_q``.  For every memory
test the moves available in that mode decide the right-hand side: an
epsilon move gives a plain call, and the accepting reads must form one of
the legal bundles (``end``; a ``?d``/``?c`` pair; a ``!d``/``!c`` pair; a
complete family of choice labels).  Modes that no bounded run reaches
default to ``end``.
"""

from __future__ import annotations

from collections import deque

from .automata import Automaton, Model, _bounded_words, is_obviously_prefix_closed
from .compiler import key_pattern
from .core import (
    END,
    Call,
    Choice,
    Equation,
    EquationSystem,
    Msg,
    Nat,
    Polarity,
    ShadesError,
    SystemClass,
    TypeExpr,
    Word,
)
from .semantics import choice_parts, is_choice

AUDIT_DEPTH = 8

_CLASSES = {
    Model.FSA: SystemClass.RECURSIVE,
    Model.ONE_COUNTER: SystemClass.ONE_COUNTER,
    Model.PUSHDOWN: SystemClass.PUSHDOWN,
}


class DecompileError(ShadesError):
    pass


class NotObviouslyPrefixClosed(DecompileError):
    pass


class ShapeViolation(DecompileError):
    def __init__(self, word: tuple, message: str):
        super().__init__(f"{message} after {list(word)}")
        self.word = word


def ctor_name(state: str) -> str:
    return f"X_{state}"


def _param(cls: SystemClass, pattern, op):
    if cls is SystemClass.ONE_COUNTER:
        return Nat(pattern.succs + {"=": 0, "+": 1, "-": -1}[op], pattern.var)
    if cls is SystemClass.PUSHDOWN:
        if op == "=":
            return pattern
        if op == "-":
            return Word((), pattern.var)
        return Word((op[1:],) + pattern.symbols, pattern.var)
    return None


def _initial_param(aut: Automaton):
    if aut.model is Model.ONE_COUNTER:
        return Nat(aut.memory)
    if aut.model is Model.PUSHDOWN:
        return Word(tuple(aut.memory))
    return None


def _reachable_modes(aut: Automaton, depth: int) -> dict[tuple, tuple]:
    """First word (in BFS order) under which each (state, test) mode is visited."""
    found: dict[tuple, tuple] = {}
    seen = set()
    queue = deque([((), aut.start)])
    while queue:
        word, config = queue.popleft()
        steps = 0
        while config is not None and config not in seen:
            seen.add(config)
            q, mem = config
            mode = (q, aut.test_of(mem))
            found.setdefault(mode, word)
            moves = aut.mode(*mode)
            if None in moves:
                op, q2 = moves[None]
                config = (q2, aut.apply(op, mem))
                steps += 1
                continue
            if q in aut.accepting and len(word) < depth:
                for sym, (op, q2) in sorted(moves.items()):
                    if q2 in aut.accepting:
                        queue.append((word + (sym,), (q2, aut.apply(op, mem))))
            break
    return found


def _bundle(reads: dict[str, tuple], call) -> TypeExpr | None:
    """Right-hand side for a legal bundle of accepting reads, else None."""
    syms = set(reads)
    if syms == {"end"}:
        return END
    for pol in Polarity:
        d, c = f"{pol.value}d", f"{pol.value}c"
        if syms == {d, c}:
            return Msg(pol, call(reads[d]), call(reads[c]))
    if syms and all(is_choice(s) for s in syms):
        parts = {s: choice_parts(s) for s in syms}
        heads = {(view, labels) for view, labels, _ in parts.values()}
        if len(heads) == 1:
            view, labels = heads.pop()
            if set(labels) == {label for _, _, label in parts.values()}:
                return Choice(view, tuple((parts[s][2], call(reads[s])) for s in syms))
    return None


def decompile(aut: Automaton) -> EquationSystem:
    if aut.model not in _CLASSES:
        raise DecompileError(f"cannot decompile a {aut.model.value} automaton")
    if not is_obviously_prefix_closed(aut):
        raise NotObviouslyPrefixClosed("more than one rejecting state, or a rejecting state that is not a sink")
    cls = _CLASSES[aut.model]
    if aut.initial not in aut.accepting:
        raise ShapeViolation((), "the empty word is rejected")
    words = _bounded_words(aut, AUDIT_DEPTH)
    for w in sorted(words):
        if w and w[:-1] not in words:
            raise ShapeViolation(w, "language is not prefix-closed")
    reachable = _reachable_modes(aut, AUDIT_DEPTH)

    eqs = []
    for q in aut.states:
        if q not in aut.accepting:
            continue
        for test in aut.tests():
            pattern = key_pattern(cls, test)

            def call(move, pattern=pattern):
                op, q2 = move
                return Call(ctor_name(q2), _param(cls, pattern, op))

            moves = aut.mode(q, test)
            if None in moves:
                if moves[None][1] not in aut.accepting:
                    body = None
                else:
                    body = call(moves[None])
            else:
                body = _bundle({s: m for s, m in moves.items() if m[1] in aut.accepting}, call) if moves else END
                if body is None and not any(m[1] in aut.accepting for m in moves.values()):
                    body = END
            if body is None:
                if (q, test) in reachable:
                    raise ShapeViolation(reachable[(q, test)], f"state {q} offers an illegal set of moves")
                body = END
            eqs.append(Equation(ctor_name(q), pattern, body))
    root = Call(ctor_name(aut.initial), _initial_param(aut))
    return EquationSystem(cls, tuple(eqs), root, tuple(aut.stack))
