"""From equation systems to automata.

Compilation first brings a system into a normal form where every equation
body is a call, ``end``, or a single communication constructor whose
immediate subterms are calls, and where every call changes the memory by at
most one step.  Each constructor then becomes a state.
"""

from __future__ import annotations

from .automata import Automaton, Model, check_loop_free, eliminate_epsilon_fsa
from .core import (
    END,
    Call,
    Choice,
    End,
    Equation,
    EquationSystem,
    Msg,
    Nat,
    NatPair,
    ShadesError,
    SystemClass,
    TypeExpr,
    Word,
    fresh_name,
    pattern_keys,
    pattern_term,
    require_valid,
)
from .semantics import END_SYMBOL, choice_symbol, cont_symbol, data_symbol


class CompileError(ShadesError):
    pass


_MODELS = {
    SystemClass.FINITE: Model.FSA,
    SystemClass.RECURSIVE: Model.FSA,
    SystemClass.ONE_COUNTER: Model.ONE_COUNTER,
    SystemClass.PUSHDOWN: Model.PUSHDOWN,
    SystemClass.TWO_COUNTER: Model.TWO_COUNTER,
}


def key_pattern(cls: SystemClass, key):
    """The canonical equation pattern for a memory test."""
    if cls is SystemClass.ONE_COUNTER:
        return Nat(0) if key == "z" else Nat(1, "N")
    if cls is SystemClass.TWO_COUNTER:
        first = Nat(0) if key[0] == "z" else Nat(1, "N")
        second = Nat(0) if key[1] == "z" else Nat(1, "N'")
        return NatPair(first, second)
    if cls is SystemClass.PUSHDOWN:
        return Word() if key is None else Word((key,), "S")
    return None


def _zero(cls: SystemClass):
    return {
        SystemClass.ONE_COUNTER: Nat(0),
        SystemClass.TWO_COUNTER: NatPair(Nat(0), Nat(0)),
        SystemClass.PUSHDOWN: Word(),
    }.get(cls)


class _Builder:
    def __init__(self, sys: EquationSystem):
        self.sys = sys
        self.cls = SystemClass.RECURSIVE if sys.cls is SystemClass.FINITE else sys.cls
        self.taken = set(sys.ctors)
        self.equations: list[Equation] = []
        self._end: str | None = None

    def end_ctor(self) -> str:
        """One shared constructor standing for ``end`` under every test."""
        if self._end is None:
            self._end = "Z" if "Z" not in self.taken else fresh_name("Z", self.taken)
            self.taken.add(self._end)
            for key in self.sys.keys():
                self.equations.append(Equation(self._end, key_pattern(self.cls, key), END))
        return self._end

    def fresh(self, base: str, pattern, make_body) -> str:
        """New constructor defined by ``make_body(name)`` at ``pattern`` and
        ``end`` at every other memory test."""
        name = fresh_name(base, self.taken)
        self.equations.append(Equation(name, pattern, make_body(name)))
        covered = set(pattern_keys(pattern))
        for key in self.sys.keys():
            if key not in covered:
                self.equations.append(Equation(name, key_pattern(self.cls, key), END))
        return name

    def system(self, root: TypeExpr) -> EquationSystem:
        return EquationSystem(self.cls, tuple(self.equations), root, self.sys.stack, self.sys.name)


def normalize_equations(sys: EquationSystem) -> EquationSystem:
    """Give every non-call subterm of a constructor its own equation."""
    if sys.cls in (SystemClass.CONTEXT_FREE, SystemClass.NESTED):
        raise CompileError(f"{sys.cls.value} systems are converted to pushdown systems before compiling")
    b = _Builder(sys)

    def top(ctor: str, pattern, body: TypeExpr) -> TypeExpr:
        if isinstance(body, Msg):
            return Msg(body.polarity, atom(ctor, pattern, body.payload), atom(ctor, pattern, body.cont))
        if isinstance(body, Choice):
            return Choice(body.view, tuple((l, atom(ctor, pattern, e)) for l, e in body.branches))
        return body

    def atom(ctor: str, pattern, e: TypeExpr) -> TypeExpr:
        if isinstance(e, Call):
            return e
        if isinstance(e, End):
            return Call(b.end_ctor(), pattern_term(pattern))
        name = b.fresh(ctor, pattern, lambda n: top(n, pattern, e))
        return Call(name, pattern_term(pattern))

    for eq in sys.equations:
        b.equations.append(Equation(eq.ctor, eq.pattern, top(eq.ctor, eq.pattern, eq.body)))
    root = sys.root
    if not isinstance(root, Call):
        zero = _zero(b.cls)
        root = Call(b.fresh("Main", zero, lambda n: top(n, zero, root)), zero)
    return b.system(root)


# ---------------------------------------------------------------- counter steps
#
# A plan per counter is ("delta", d) or ("reset", r).  One step applies at most
# one increment or decrement per counter; helpers carry the remaining plan.


def _step(plan, test):
    kind, n = plan
    if kind == "reset":
        if test == "s":
            return "-", plan
        if test == "?":
            return "=", plan
        kind = "delta"
    if n < 0:
        return "-", ("delta", n + 1)
    if n == 0:
        return "=", ("delta", 0)
    return "+", ("delta", n - 1)


def _nat_after(p: Nat, op: str) -> Nat:
    if p.var is None:
        return Nat({"=": 0, "+": 1}[op])
    return Nat(p.succs + {"-": -1, "=": 0, "+": 1}[op], p.var)


def _test_of(p: Nat) -> str:
    if p.var is None:
        return "z"
    return "s" if p.succs else "?"


def normalize_counter_params(sys: EquationSystem) -> EquationSystem:
    """Rewrite counter calls so that each changes a counter by at most one."""
    if sys.cls not in (SystemClass.ONE_COUNTER, SystemClass.TWO_COUNTER):
        raise CompileError("normalize_counter_params expects a counter system")
    b = _Builder(sys)
    two = sys.cls is SystemClass.TWO_COUNTER
    helpers: dict[tuple, str] = {}

    def comps(x):
        return tuple(x) if two else (x,)

    def build(x):
        return NatPair(*x) if two else x[0]

    def via(base: str, pattern, target: str, plans) -> Call:
        pats = comps(pattern)
        ops, rest = zip(*(_step(p, _test_of(q)) for p, q in zip(plans, pats)))
        param = build(tuple(_nat_after(q, op) for q, op in zip(pats, ops)))
        if all(r == ("delta", 0) for r in rest):
            return Call(target, param)
        return Call(helper(base, target, rest), param)

    def helper(base: str, target: str, plans) -> str:
        key = (target, plans)
        if key not in helpers:
            name = helpers[key] = fresh_name(base, b.taken)
            for k in sys.keys():
                pattern = key_pattern(b.cls, k)
                b.equations.append(Equation(name, pattern, via(base, pattern, target, plans)))
        return helpers[key]

    def plan(p: Nat, c: Nat):
        if c.var is None:
            return ("delta", c.succs) if p.var is None else ("reset", c.succs)
        return ("delta", c.succs - p.succs)

    def fix(eq: Equation, call: Call) -> Call:
        plans = tuple(plan(p, c) for p, c in zip(comps(eq.pattern), comps(call.param)))
        return via(eq.ctor, eq.pattern, call.ctor, plans)

    for eq in sys.equations:
        b.equations.append(Equation(eq.ctor, eq.pattern, _map_immediate_calls(eq.body, lambda c, eq=eq: fix(eq, c))))
    return b.system(sys.root)


def _map_immediate_calls(body: TypeExpr, fn) -> TypeExpr:
    if isinstance(body, Call):
        return fn(body)
    if isinstance(body, Msg):
        return Msg(body.polarity, _map_immediate_calls(body.payload, fn), _map_immediate_calls(body.cont, fn))
    if isinstance(body, Choice):
        return Choice(body.view, tuple((l, _map_immediate_calls(e, fn)) for l, e in body.branches))
    return body


def normalize_stack_params(sys: EquationSystem) -> EquationSystem:
    """Rewrite stack calls so that each pops, pushes or keeps one symbol."""
    if sys.cls is not SystemClass.PUSHDOWN:
        raise CompileError("normalize_stack_params expects a pushdown system")
    b = _Builder(sys)
    pushers: dict[tuple, str] = {}
    drains: dict[tuple, str] = {}

    def from_empty(base: str, target: str, word: tuple) -> Call:
        if len(word) <= 1:
            return Call(target, Word(word))
        return Call(pusher(base, target, word[:-1]), Word(word[-1:]))

    def pusher(base: str, target: str, word: tuple) -> str:
        """Constructor that pushes ``word`` (top first) and continues as ``target``."""
        key = (target, word)
        if key not in pushers:
            name = pushers[key] = fresh_name(base, b.taken)
            nxt = target if len(word) == 1 else pusher(base, target, word[:-1])
            b.equations.append(Equation(name, Word(), Call(nxt, Word(word[-1:]))))
            for sym in sys.stack:
                b.equations.append(Equation(name, Word((sym,), "S"), Call(nxt, Word((word[-1], sym), "S"))))
        return pushers[key]

    def drain(base: str, target: str, word: tuple) -> str:
        key = (target, word)
        if key not in drains:
            name = drains[key] = fresh_name(base, b.taken)
            b.equations.append(Equation(name, Word(), from_empty(base, target, word)))
            for sym in sys.stack:
                b.equations.append(Equation(name, Word((sym,), "S"), Call(name, Word((), "S"))))
        return drains[key]

    def fix(eq: Equation, call: Call) -> Call:
        pat, w = eq.pattern, call.param
        if not pat.symbols:
            return from_empty(eq.ctor, call.ctor, w.symbols)
        top, var = pat.symbols[0], pat.var
        if w.var is None:
            return Call(drain(eq.ctor, call.ctor, w.symbols), Word((), var))
        word = w.symbols
        if word in ((), (top,)) or (len(word) == 2 and word[1] == top):
            return call
        if word[-1] == top:
            return Call(pusher(eq.ctor, call.ctor, word[:-2]), Word((word[-2], top), var))
        return Call(pusher(eq.ctor, call.ctor, word), Word((), var))

    for eq in sys.equations:
        b.equations.append(Equation(eq.ctor, eq.pattern, _map_immediate_calls(eq.body, lambda c, eq=eq: fix(eq, c))))
    return b.system(sys.root)


def normalize(sys: EquationSystem) -> EquationSystem:
    """Both normalization passes, as applied by :func:`compile_system`."""
    out = normalize_equations(sys)
    if out.cls.counters:
        out = normalize_counter_params(out)
    elif out.cls is SystemClass.PUSHDOWN:
        out = normalize_stack_params(out)
    return out


# ---------------------------------------------------------------- automaton construction


def state_name(ctor: str) -> str:
    return f"q_{ctor}"


END_STATE = "q_end"


def _nat_op(p: Nat, c: Nat) -> str:
    if p.var is None:
        ops = {0: "=", 1: "+"}
        if c.var is None and c.succs in ops:
            return ops[c.succs]
    elif c.var == p.var:
        ops = {-1: "-", 0: "=", 1: "+"}
        d = c.succs - p.succs
        if d in ops:
            return ops[d]
    raise CompileError(f"call parameter {c} is not one step away from pattern {p}")


def memory_op(cls: SystemClass, pattern, param):
    """The automaton operation that turns ``pattern`` into ``param``."""
    if cls is SystemClass.ONE_COUNTER:
        return _nat_op(pattern, param)
    if cls is SystemClass.TWO_COUNTER:
        return (_nat_op(pattern.first, param.first), _nat_op(pattern.second, param.second))
    if cls is SystemClass.PUSHDOWN:
        top = pattern.symbols
        if param.var != pattern.var:
            raise CompileError(f"call parameter {param} does not keep the rest of {pattern}")
        w = param.symbols
        if w == top:
            return "="
        if top and w == ():
            return "-"
        if len(w) == len(top) + 1 and w[1:] == top:
            return "+" + w[0]
        raise CompileError(f"call parameter {param} is not one step away from pattern {pattern}")
    return "="


def _initial_memory(cls: SystemClass, param):
    if cls is SystemClass.ONE_COUNTER:
        return param.succs
    if cls is SystemClass.TWO_COUNTER:
        return (param.first.succs, param.second.succs)
    if cls is SystemClass.PUSHDOWN:
        return param.symbols
    return None


def compile_raw(norm: EquationSystem) -> Automaton:
    """Automaton of an already normalized system, epsilon moves included."""
    cls = norm.cls
    model = _MODELS[cls]
    states = [state_name(c) for c in norm.ctors] + [END_STATE]
    stay = ("=", "=") if model is Model.TWO_COUNTER else "="
    trans: dict[tuple, tuple] = {}
    for ctor in norm.ctors:
        q = state_name(ctor)
        for key in norm.keys():
            eq = norm.equation_for(ctor, key)
            if eq is None:
                trans[(q, key, None)] = (stay, q)
                continue

            def edge(call: Call):
                if not isinstance(call, Call):
                    raise CompileError(f"equation for {ctor} is not normalized")
                return memory_op(cls, eq.pattern, call.param), state_name(call.ctor)

            body = eq.body
            if isinstance(body, Call):
                trans[(q, key, None)] = edge(body)
            elif isinstance(body, End):
                trans[(q, key, END_SYMBOL)] = (stay, END_STATE)
            elif isinstance(body, Msg):
                trans[(q, key, data_symbol(body.polarity))] = edge(body.payload)
                trans[(q, key, cont_symbol(body.polarity))] = edge(body.cont)
            elif isinstance(body, Choice):
                for label, e in body.branches:
                    trans[(q, key, choice_symbol(body.view, body.labels, label))] = edge(e)
            else:
                raise CompileError(f"{type(body).__name__} cannot be compiled")
    root = norm.root
    if not isinstance(root, Call):
        raise CompileError("root of a normalized system must be a call")
    return Automaton(
        model,
        tuple(states),
        state_name(root.ctor),
        _initial_memory(cls, root.param),
        frozenset(states),
        trans,
        norm.stack,
    )


def compile_system(sys: EquationSystem) -> Automaton:
    """Automaton accepting exactly the traces of the system's root.

    Finite automata are returned without epsilon moves whenever the system
    is contractive; otherwise the epsilon loops are kept so that they remain
    observable.
    """
    require_valid(sys)
    if sys.cls not in _MODELS:
        raise CompileError(f"{sys.cls.value} systems are converted to pushdown systems before compiling")
    aut = compile_raw(normalize(sys))
    if aut.model is Model.FSA and check_loop_free(aut).ok:
        aut = eliminate_epsilon_fsa(aut)
    return aut
