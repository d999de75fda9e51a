"""Deterministic automata with an optional counter, two counters or a stack.

A transition table maps ``(state, test, input)`` to ``(op, target)``.  The
test is what the memory looks like (``None`` for finite automata, ``"z"`` or
``"s"`` per counter, a stack top or ``None`` for an empty stack).  ``input``
is a trace symbol or ``None`` for an epsilon move.  Missing entries lead to an
implicit, non-accepting error sink.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from ._trivial import Rewrite, TrivialRewrites
from .core import ShadesError, Verdict
from .semantics import Word

State = str
Test = object
Op = object


class Model(str, Enum):
    FSA = "fsa"
    ONE_COUNTER = "onecounter"
    PUSHDOWN = "pushdown"
    TWO_COUNTER = "twocounter"


class AutomatonError(ShadesError):
    pass


class Nondeterministic(AutomatonError):
    pass


class Diverge(AutomatonError):
    """An epsilon chain exceeded its step limit."""


class PreconditionBreach(ShadesError):
    pass


class NonContractive(ShadesError):
    pass


EPS_LIMIT = 10_000


@dataclass(eq=False)
class Automaton:
    model: Model
    states: tuple[State, ...]
    initial: State
    memory: object
    accepting: frozenset[State]
    transitions: dict[tuple, tuple]
    stack: tuple[str, ...] = ()
    _modes: dict = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        self.model = Model(self.model)
        self.accepting = frozenset(self.accepting)
        self.stack = tuple(sorted(set(self.stack)))
        if self.memory is None:
            self.memory = {Model.FSA: None, Model.ONE_COUNTER: 0, Model.PUSHDOWN: (), Model.TWO_COUNTER: (0, 0)}[
                self.model
            ]
        modes: dict = {}
        for (q, t, a), (op, q2) in self.transitions.items():
            modes.setdefault((q, t), {})[a] = (op, q2)
        self._modes = modes
        self._check()

    # -- structure

    def _check(self) -> None:
        known = set(self.states)
        if self.initial not in known:
            raise AutomatonError(f"initial state {self.initial} is not declared")
        if not self.accepting <= known:
            raise AutomatonError(f"undeclared accepting states {sorted(self.accepting - known)}")
        tests = set(self.tests())
        for (q, t, a), (op, q2) in self.transitions.items():
            if q not in known or q2 not in known:
                raise AutomatonError(f"transition {q} -> {q2} mentions an undeclared state")
            if t not in tests:
                raise AutomatonError(f"test {t!r} is not valid for a {self.model.value} automaton")
            if not self.op_allowed(op, t):
                raise AutomatonError(f"operation {op!r} is not allowed under test {t!r}")
        for (q, t), entries in self._modes.items():
            if None in entries and len(entries) > 1:
                raise Nondeterministic(f"state {q} mixes epsilon and reading moves under test {t!r}")

    def tests(self) -> tuple:
        if self.model is Model.ONE_COUNTER:
            return ("z", "s")
        if self.model is Model.TWO_COUNTER:
            return (("z", "z"), ("z", "s"), ("s", "z"), ("s", "s"))
        if self.model is Model.PUSHDOWN:
            return (None,) + self.stack
        return (None,)

    def op_allowed(self, op, test) -> bool:
        m = self.model
        if m is Model.FSA:
            return op == "="
        if m is Model.ONE_COUNTER:
            return op in ("=", "+") or (op == "-" and test == "s")
        if m is Model.TWO_COUNTER:
            return (
                isinstance(op, tuple)
                and len(op) == 2
                and all(o in ("=", "+") or (o == "-" and t == "s") for o, t in zip(op, test))
            )
        if op in ("=",) or (op == "-" and test is not None):
            return True
        return isinstance(op, str) and op.startswith("+") and op[1:] in self.stack

    def mode(self, state: State, test) -> dict:
        return self._modes.get((state, test), {})

    def alphabet(self) -> tuple[str, ...]:
        return tuple(sorted({a for (_, _, a) in self.transitions if a is not None}))

    def replace(self, **changes) -> "Automaton":
        fields = dict(
            model=self.model,
            states=self.states,
            initial=self.initial,
            memory=self.memory,
            accepting=self.accepting,
            transitions=self.transitions,
            stack=self.stack,
        )
        fields.update(changes)
        return Automaton(**fields)

    # -- memory

    def test_of(self, mem):
        m = self.model
        if m is Model.ONE_COUNTER:
            return "s" if mem else "z"
        if m is Model.TWO_COUNTER:
            return tuple("s" if v else "z" for v in mem)
        if m is Model.PUSHDOWN:
            return mem[0] if mem else None
        return None

    def apply(self, op, mem):
        m = self.model
        if m is Model.FSA:
            return None
        if m is Model.ONE_COUNTER:
            return mem + {"=": 0, "+": 1, "-": -1}[op]
        if m is Model.TWO_COUNTER:
            return tuple(v + {"=": 0, "+": 1, "-": -1}[o] for o, v in zip(op, mem))
        if op == "=":
            return mem
        if op == "-":
            return mem[1:]
        return (op[1:],) + mem

    # -- runs

    def step(self, config, symbol):
        """Read ``symbol`` from a reading configuration; None means the sink."""
        q, mem = config
        entry = self.mode(q, self.test_of(mem)).get(symbol)
        if entry is None:
            return None
        op, q2 = entry
        return q2, self.apply(op, mem)

    def eps_path(self, config, limit: int = EPS_LIMIT) -> tuple[bool, tuple | None]:
        """Follow epsilon moves from ``config``.

        Returns whether an accepting state was passed and the final reading
        configuration, or None when the path loops forever.
        """
        accepted = False
        seen = set()
        while True:
            q, mem = config
            accepted = accepted or q in self.accepting
            entry = self.mode(q, self.test_of(mem)).get(None)
            if entry is None:
                return accepted, config
            if config in seen:
                return accepted, None
            seen.add(config)
            if len(seen) > limit:
                raise Diverge(f"epsilon chain from {config[0]} exceeds {limit} steps")
            op, q2 = entry
            config = (q2, self.apply(op, mem))

    @property
    def start(self):
        return (self.initial, self.memory)


def run(aut: Automaton, word: Iterable[str]) -> bool:
    """Whether ``aut`` accepts ``word``.  Raises :class:`Diverge` when an
    epsilon chain never reaches a reading configuration."""

    def settle(config):
        accepted, end = aut.eps_path(config)
        if end is None:
            raise Diverge(f"epsilon moves from {config[0]} cycle forever")
        return accepted, end

    accepted, config = settle(aut.start)
    for sym in word:
        config = aut.step(config, sym)
        if config is None:
            return False
        accepted, config = settle(config)
    return accepted


def _dead_states(aut: Automaton) -> set[State]:
    """States from which no accepting state is reachable in the state graph."""
    back: dict[State, set[State]] = {}
    for (q, _, _), (_, q2) in aut.transitions.items():
        back.setdefault(q2, set()).add(q)
    live = set(aut.accepting)
    todo = list(live)
    while todo:
        for p in back.get(todo.pop(), ()):
            if p not in live:
                live.add(p)
                todo.append(p)
    return set(aut.states) - live


def _explore(aut: Automaton, max_len: int, prune_dead: bool = True) -> Iterator[tuple[Word, bool, tuple | None, tuple | None]]:
    """Breadth-first walk over words: (word, accepted, first config, reading config)."""
    dead = _dead_states(aut) if prune_dead else set()
    alphabet = aut.alphabet()
    accepted, config = aut.eps_path(aut.start)
    queue = deque([((), accepted, aut.start, config)])
    while queue:
        word, acc, first, config = queue.popleft()
        yield word, acc, first, config
        if config is None or len(word) >= max_len:
            continue
        readable = aut.mode(config[0], aut.test_of(config[1]))
        for sym in alphabet:
            if sym not in readable:
                continue
            nxt = aut.step(config, sym)
            if nxt[0] in dead:
                continue
            acc2, end = aut.eps_path(nxt)
            queue.append((word + (sym,), acc2, nxt, end))


def enumerate_accepted(aut: Automaton, max_len: int) -> set[Word]:
    return {w for w, acc, _, _ in _explore(aut, max_len) if acc}


# ---------------------------------------------------------------- loop freedom


def _trivial_view(aut: Automaton):
    """Express epsilon moves as stack rewrites over a common top alphabet."""
    m = aut.model

    def key_to_test(key):
        if m is Model.ONE_COUNTER:
            return "s" if key else "z"
        return key

    def rule(q, key):
        entry = aut.mode(q, key_to_test(key)).get(None)
        if entry is None:
            return None
        op, q2 = entry
        if m is Model.FSA:
            return Rewrite(q2)
        top = () if key is None else (key,)
        if m is Model.ONE_COUNTER:
            op = {"=": "=", "+": "+u", "-": "-"}[op]
        if op == "=":
            return Rewrite(q2, top)
        if op == "-":
            return Rewrite(q2, ())
        return Rewrite(q2, (op[1:],) + top)

    tops = (None,) if m is Model.FSA else (None, "u") if m is Model.ONE_COUNTER else (None,) + aut.stack
    return rule, tops


def epsilon_loops(aut: Automaton) -> dict[tuple, object]:
    """Seeds ``(state, top)`` that start an infinite epsilon sequence."""
    if aut.model is Model.TWO_COUNTER:
        raise AutomatonError("epsilon loops of two-counter automata are not decidable")
    rule, tops = _trivial_view(aut)
    return TrivialRewrites(rule).bad(aut.states, tops)


def _replay_eps(aut: Automaton, config, limit: int = 64) -> tuple:
    path = [config[0]]
    seen = {config}
    for _ in range(limit):
        q, mem = config
        entry = aut.mode(q, aut.test_of(mem)).get(None)
        if entry is None:
            break
        config = (entry[1], aut.apply(entry[0], mem))
        path.append(config[0])
        if config in seen:
            break
        seen.add(config)
    return tuple(path)


def _seed_memory(aut: Automaton, top):
    if aut.model is Model.ONE_COUNTER:
        return 1 if top else 0
    if aut.model is Model.PUSHDOWN:
        return () if top is None else (top,)
    return None


def check_loop_free(aut: Automaton, fuel: int = 1000) -> Verdict:
    """No configuration starts an infinite sequence of epsilon moves.

    Two-counter automata get a bounded search from representative seeds.
    """
    if aut.model is Model.TWO_COUNTER:
        return _bounded_loop_free(aut, fuel)
    bad = epsilon_loops(aut)
    if not bad:
        return Verdict.success()
    q, top = min(bad, key=lambda k: (k[0], str(k[1])))
    witness = _replay_eps(aut, (q, _seed_memory(aut, top)))
    return Verdict.failure("epsilon loop", witness=witness, bad=frozenset(bad))


def _bounded_loop_free(aut: Automaton, fuel: int) -> Verdict:
    unknown = False
    for q in aut.states:
        for mem in ((0, 0), (0, 1), (1, 0), (1, 1)):
            config, seen = (q, mem), set()
            for _ in range(fuel):
                entry = aut.mode(config[0], aut.test_of(config[1])).get(None)
                if entry is None:
                    break
                if config in seen:
                    return Verdict.failure("epsilon loop", witness=_replay_eps(aut, (q, mem)), fuel=fuel)
                seen.add(config)
                config = (entry[1], aut.apply(entry[0], config[1]))
            else:
                unknown = True
    if unknown:
        return Verdict.unknown("fuel exhausted", fuel=fuel)
    return Verdict.success(fuel=fuel)


# ---------------------------------------------------------------- epsilon elimination


def eliminate_epsilon_fsa(aut: Automaton) -> Automaton:
    """Remove epsilon moves of a finite automaton.

    A state ``X`` with an epsilon move to ``Y`` disappears and every edge into
    ``X`` is redirected to ``Y``.  An epsilon self loop is dropped, leaving a
    state without transitions.  Longer epsilon cycles are rejected.
    """
    if aut.model is not Model.FSA:
        raise AutomatonError("epsilon elimination is defined for finite automata only")
    eps = {q: q2 for (q, _, a), (_, q2) in aut.transitions.items() if a is None}

    def resolve(q):
        path = [q]
        while q in eps and eps[q] != q:
            q = eps[q]
            if q in path:
                raise NonContractive(f"epsilon cycle through {' -> '.join(path + [q])}")
            path.append(q)
        return path

    accepting = set(aut.accepting)
    states = [q for q in aut.states if q not in eps or eps[q] == q]
    clones: dict[State, State] = {}

    def target(q):
        path = resolve(q)
        end = path[-1]
        if end in accepting or not any(p in accepting for p in path):
            return end
        if end not in clones:
            clone = end + "_acc"
            while clone in aut.states or clone in clones.values():
                clone += "_"
            clones[end] = clone
        return clones[end]

    trans = {}
    for (q, t, a), (op, q2) in aut.transitions.items():
        if a is not None and q in states:
            trans[(q, t, a)] = (op, target(q2))
    initial = target(aut.initial)
    for end, clone in clones.items():
        states.append(clone)
        accepting.add(clone)
        for (q, t, a), v in list(trans.items()):
            if q == end:
                trans[(clone, t, a)] = v
    accepting &= set(states)
    return aut.replace(states=tuple(states), initial=initial, accepting=frozenset(accepting), transitions=trans)


# ---------------------------------------------------------------- normal form and prefix closure


def _is_sink(aut: Automaton, q: State) -> bool:
    for (p, _, a), (_, q2) in aut.transitions.items():
        if p == q and (a is None or q2 != q):
            return False
    return True


def is_obviously_prefix_closed(aut: Automaton) -> bool:
    """At most one explicit non-accepting state, and that one is a sink.

    Missing table entries lead to an implicit sink, identified with the
    explicit one when it exists.
    """
    rejecting = [q for q in aut.states if q not in aut.accepting]
    return len(rejecting) == 0 or (len(rejecting) == 1 and _is_sink(aut, rejecting[0]))


def check_normal_form_bounded(aut: Automaton, max_len: int = 8) -> Verdict:
    """Every word up to ``max_len`` can be read, and acceptance is decided by
    the configuration reached right after the last read."""
    sinks = {q for q in aut.states if q not in aut.accepting and _is_sink(aut, q)}
    alphabet = aut.alphabet()
    queue = deque([((), aut.start)])
    while queue:
        word, first = queue.popleft()
        if first[0] in sinks:
            continue
        try:
            accepted, config = aut.eps_path(first)
        except Diverge:
            config, accepted = None, False
        if config is None:
            return Verdict.failure("guaranteed to read", witness=word)
        if accepted != (first[0] in aut.accepting):
            return Verdict.failure("immediate acceptance", witness=word)
        if len(word) >= max_len:
            continue
        for sym in alphabet:
            nxt = aut.step(config, sym)
            if nxt is not None:
                queue.append((word + (sym,), nxt))
    return Verdict.success()


def to_obviously_prefix_closed(aut: Automaton, audit_len: int = 8) -> Automaton:
    """Equivalent automaton whose only rejecting state is a fresh sink."""
    nf = check_normal_form_bounded(aut, audit_len)
    if not nf.ok:
        raise PreconditionBreach(f"not in normal form ({nf.reason}) at {list(nf.witness)}")
    words = _bounded_words(aut, audit_len)
    for w in words:
        if w and w[:-1] not in words:
            raise PreconditionBreach(f"language is not prefix-closed: {list(w)} without its prefix")
    error = "q_error"
    while error in aut.states:
        error += "_"
    trans = {}
    for (q, t, a), (op, q2) in aut.transitions.items():
        if a is not None and q2 not in aut.accepting:
            q2 = error
        trans[(q, t, a)] = (op, q2)
    for t in aut.tests():
        for a in aut.alphabet():
            trans[(error, t, a)] = ("=" if aut.model is not Model.TWO_COUNTER else ("=", "="), error)
    initial = aut.initial if () in words else error
    return aut.replace(
        states=aut.states + (error,),
        initial=initial,
        accepting=frozenset(aut.states),
        transitions=trans,
    )


def _bounded_words(aut: Automaton, max_len: int) -> set[Word]:
    return {w for w, acc, _, _ in _explore(aut, max_len, prune_dead=False) if acc}
