"""Decision procedures: contractiveness and formation."""

from __future__ import annotations

from collections import deque

from ._trivial import MISSING, Rewrite, TrivialRewrites
from .core import (
    Call,
    EquationSystem,
    Nat,
    NatPair,
    Seq,
    Skip,
    SystemClass,
    TypeExpr,
    Verdict,
    Word,
    calls,
    require_valid,
)

__all__ = [
    "Verdict",
    "check_contractive",
    "check_contractive_bounded",
    "check_contractive_cf",
    "check_formation",
    "is_terminated",
    "trivial_rewrites",
]

_PUSHDOWN_LIKE = (SystemClass.RECURSIVE, SystemClass.ONE_COUNTER, SystemClass.PUSHDOWN)


# ---------------------------------------------------------------- pushdown view


def _to_top(sys: EquationSystem, key):
    if sys.cls is SystemClass.ONE_COUNTER:
        return "u" if key == "s" else None
    return key


def _to_key(sys: EquationSystem, top):
    if sys.cls is SystemClass.ONE_COUNTER:
        return "s" if top else "z"
    return top


def _rule(sys: EquationSystem):
    one = sys.cls is SystemClass.ONE_COUNTER

    def rule(ctor, top):
        eq = sys.equation_for(ctor, _to_key(sys, top))
        if eq is None:
            return MISSING
        body = eq.body
        if not isinstance(body, Call):
            return None
        p = body.param
        if p is None:
            return Rewrite(body.ctor)
        if one:
            return Rewrite(body.ctor, ("u",) * p.succs, p.var is not None)
        return Rewrite(body.ctor, p.symbols, p.var is not None)

    return rule


def _tops(sys: EquationSystem) -> tuple:
    if sys.cls is SystemClass.ONE_COUNTER:
        return (None, "u")
    if sys.cls is SystemClass.PUSHDOWN:
        return (None,) + sys.stack
    return (None,)


def trivial_rewrites(sys: EquationSystem) -> TrivialRewrites:
    """Run the trivial-equation analysis over every seed of ``sys``."""
    engine = TrivialRewrites(_rule(sys))
    for ctor in sys.ctors:
        for top in _tops(sys):
            engine.outcome(ctor, top)
    return engine


def _bad_identifiers(sys: EquationSystem) -> frozenset:
    engine = trivial_rewrites(sys)
    return frozenset(
        (ctor, _to_key(sys, top))
        for ctor in sys.ctors
        for top in _tops(sys)
        if engine.outcome(ctor, top).kind == "loop"
    )


def _seed_value(sys: EquationSystem, key):
    if sys.cls is SystemClass.ONE_COUNTER:
        return Nat(1 if key == "s" else 0)
    if sys.cls is SystemClass.TWO_COUNTER:
        return NatPair(*(Nat(1 if k == "s" else 0) for k in key))
    if sys.cls is SystemClass.PUSHDOWN:
        return Word(() if key is None else (key,))
    return None


def _show(call: Call) -> str:
    from .surface import print_expr

    p = call.param
    if isinstance(p, Word) and len(p.symbols) > 8:
        return print_expr(Call(call.ctor, Word(p.symbols[:8]))).replace(")", " ...)")
    return print_expr(call)


def _replay(sys: EquationSystem, call: Call, limit: int = 12) -> tuple[str, ...]:
    """Concrete trivial-rewrite sequence from ``call``, for witnesses."""
    out, seen = [_show(call)], {call}
    from .core import substitute

    for _ in range(limit):
        found = sys.lookup(call.ctor, call.param)
        if found is None:
            out.append("<no equation>")
            break
        eq, binding = found
        body = eq.body
        if not isinstance(body, Call):
            break
        call = substitute(body, binding)
        out.append(_show(call))
        if call in seen:
            break
        seen.add(call)
    return tuple(out)


# ---------------------------------------------------------------- contractiveness


def check_contractive(sys: EquationSystem) -> Verdict:
    """Every identifier reaches a communication constructor through
    finitely many trivial equations."""
    require_valid(sys)
    c = sys.cls
    if c is SystemClass.FINITE:
        return Verdict.success()
    if c is SystemClass.CONTEXT_FREE:
        return check_contractive_cf(sys)
    if c is SystemClass.TWO_COUNTER:
        return check_contractive_bounded(sys)
    if c is SystemClass.NESTED:
        from .transform import nested_to_pushdown

        return check_contractive(nested_to_pushdown(sys))
    bad = _bad_identifiers(sys)
    if not bad:
        return Verdict.success()
    ctor, key = min(bad, key=lambda b: (b[0], str(b[1])))
    missing = sys.equation_for(ctor, key) is None
    reason = "missing equation" if missing else "trivial equations loop"
    witness = _replay(sys, Call(ctor, _seed_value(sys, key)))
    return Verdict.failure(reason, witness=witness, bad=bad)


def _lfp(sys: EquationSystem, step) -> dict[str, bool]:
    val = {x: False for x in sys.ctors}
    changed = True
    while changed:
        changed = False
        for x in sys.ctors:
            if not val[x] and step(sys.equations_of(x)[0].body, val):
                val[x] = changed = True
    return val


def _done(expr: TypeExpr, done: dict[str, bool]) -> bool:
    if isinstance(expr, Skip):
        return True
    if isinstance(expr, Seq):
        return _done(expr.left, done) and _done(expr.right, done)
    if isinstance(expr, Call):
        return done.get(expr.ctor, False)
    return False


def _terminated(sys: EquationSystem) -> dict[str, bool]:
    return _lfp(sys, _done)


def is_terminated(sys: EquationSystem, expr: TypeExpr) -> bool:
    """Whether a context-free expression is behaviourally ``skip``."""
    return _done(expr, _terminated(sys))


def _contr(expr: TypeExpr, done: dict, contr: dict) -> bool:
    if isinstance(expr, Seq):
        if _done(expr.left, done):
            return _contr(expr.right, done, contr)
        return _contr(expr.left, done, contr)
    if isinstance(expr, Call):
        return contr.get(expr.ctor, False)
    return True


def check_contractive_cf(sys: EquationSystem) -> Verdict:
    require_valid(sys)
    if sys.cls is not SystemClass.CONTEXT_FREE:
        raise ValueError("check_contractive_cf expects a context-free system")
    done = _terminated(sys)
    contr = _lfp(sys, lambda e, val: _contr(e, done, val))
    bad = frozenset(x for x, ok in contr.items() if not ok)
    if not bad:
        return Verdict.success()
    return Verdict.failure("variables without a guarded unfolding", witness=tuple(sorted(bad)), bad=bad)


def check_contractive_bounded(sys: EquationSystem, fuel: int = 1000) -> Verdict:
    """Bounded search for two-counter systems (contractiveness is undecidable).

    Every ``(ctor, zero/nonzero, zero/nonzero)`` seed is rewritten for at most
    ``fuel`` trivial steps.  A repeated identifier is a definite loop.
    """
    require_valid(sys)
    from .core import substitute

    unknown = []
    for ctor in sys.ctors:
        for key in sys.keys():
            call = Call(ctor, _seed_value(sys, key))
            seen: set = set()
            for _ in range(fuel):
                found = sys.lookup(call.ctor, call.param)
                if found is None:
                    return Verdict.failure("missing equation", witness=_replay(sys, Call(ctor, _seed_value(sys, key))), fuel=fuel)
                if call in seen:
                    return Verdict.failure(
                        "trivial equations loop", witness=_replay(sys, Call(ctor, _seed_value(sys, key))), fuel=fuel
                    )
                seen.add(call)
                eq, binding = found
                if not isinstance(eq.body, Call):
                    break
                call = substitute(eq.body, binding)
            else:
                unknown.append((ctor, key))
    if unknown:
        return Verdict.unknown("fuel exhausted", witness=tuple(unknown), fuel=fuel)
    return Verdict.success(fuel=fuel)


# ---------------------------------------------------------------- formation


def check_formation(sys: EquationSystem, expr: TypeExpr | None = None) -> Verdict:
    """Whether ``expr`` (default: the root) is a type: no identifier reachable
    from it starts an infinite trivial-rewrite sequence."""
    require_valid(sys)
    expr = sys.root if expr is None else expr
    c = sys.cls
    if c is SystemClass.FINITE:
        return Verdict.success()
    if c is SystemClass.CONTEXT_FREE:
        return _formation_cf(sys, expr)
    if c is SystemClass.TWO_COUNTER:
        return check_contractive_bounded(sys)
    if c is SystemClass.NESTED:
        from .transform import nested_to_pushdown

        pd = nested_to_pushdown(sys.with_root(expr))
        return check_formation(pd)
    return _formation_pushdown(sys.with_root(expr))


def _formation_cf(sys: EquationSystem, expr: TypeExpr) -> Verdict:
    contractive = check_contractive_cf(sys)
    reach: set[str] = set()
    todo = [c.ctor for c in calls(expr)]
    while todo:
        x = todo.pop()
        if x not in reach:
            reach.add(x)
            todo.extend(c.ctor for c in calls(sys.equations_of(x)[0].body))
    bad = frozenset(reach & contractive.bad)
    if bad:
        return Verdict.failure("reachable variable is not contractive", witness=tuple(sorted(bad)), bad=bad)
    return Verdict.success()


_BOTTOM = "#bottom"


def _pds(aut):
    """Pushdown rules ``(q, top) -> (q', word)`` of an automaton, ignoring input."""
    from .automata import Model

    rules = []
    for (q, t, _), (op, q2) in aut.transitions.items():
        if aut.model is Model.ONE_COUNTER:
            top = "u" if t == "s" else _BOTTOM
            op = {"=": "=", "+": "+u", "-": "-"}[op]
        else:
            top = _BOTTOM if t is None else t
        if op == "=":
            word = (top,)
        elif op == "-":
            word = ()
        else:
            word = (op[1:], top)
        rules.append((q, top, q2, word))
    return rules


def _initial_stack(aut) -> tuple:
    from .automata import Model

    if aut.model is Model.ONE_COUNTER:
        return ("u",) * aut.memory + (_BOTTOM,)
    if aut.model is Model.PUSHDOWN:
        return tuple(aut.memory) + (_BOTTOM,)
    return (_BOTTOM,)


def pre_star_reaches(aut, targets: set[tuple]) -> bool:
    """Whether the initial configuration can reach a state/top pair in
    ``targets`` (tops use ``None`` for the empty stack).

    Saturation of a finite automaton over stack words: it starts by accepting
    the target configurations and adds ``p --top--> s`` whenever a rule
    ``(p, top) -> (p', w)`` has ``p' --w-->* s``.
    """
    from .automata import Model

    final = "#accept"
    edges: set[tuple] = set()
    one = aut.model is Model.ONE_COUNTER
    for q, top in targets:
        sym = _BOTTOM if top is None else ("u" if one else top)
        edges.add((q, sym, final))
    symbols = {_BOTTOM} | ({"u"} if one else set(aut.stack))
    for sym in symbols:
        edges.add((final, sym, final))
    rules = _pds(aut)

    def reach(state, word):
        cur = {state}
        for sym in word:
            cur = {s2 for (s1, a, s2) in edges if s1 in cur and a == sym}
            if not cur:
                break
        return cur

    changed = True
    while changed:
        changed = False
        for p, top, p2, word in rules:
            for s in reach(p2, word):
                if (p, top, s) not in edges:
                    edges.add((p, top, s))
                    changed = True
    return final in reach(aut.initial, _initial_stack(aut))


def _bfs_witness(aut, targets: set[tuple], limit: int = 20000):
    """Shortest input word leading to a target configuration, if found quickly."""
    start = aut.start
    queue = deque([(start, ())])
    seen = {start}
    while queue and len(seen) < limit:
        (q, mem), word = queue.popleft()
        test = aut.test_of(mem)
        if (q, test) in targets:
            return word, (q, test)
        for (p, t, a), (op, q2) in aut.transitions.items():
            if p == q and t == test:
                nxt = (q2, aut.apply(op, mem))
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append((nxt, word + ((a,) if a else ())))
    return None


def reachable_bad(sys: EquationSystem):
    """(reachable?, bad identifiers, compiled automaton) for a pushdown-like system."""
    from .compiler import compile_raw, normalize, state_name

    norm = normalize(sys)
    bad = _bad_identifiers(norm)
    aut = compile_raw(norm)
    targets = set()
    for ctor, key in bad:
        if sys.cls is SystemClass.ONE_COUNTER:
            targets.add((state_name(ctor), "u" if key == "s" else None))
        else:
            targets.add((state_name(ctor), key))
    return (pre_star_reaches(aut, targets) if targets else False), bad, aut


def _formation_pushdown(sys: EquationSystem) -> Verdict:
    if sys.cls not in _PUSHDOWN_LIKE:
        raise ValueError(f"formation is not decidable for {sys.cls.value} systems")
    reachable, bad, aut = reachable_bad(sys)
    if not reachable:
        return Verdict.success()
    from .compiler import state_name

    targets = {(state_name(c), k) for c, k in bad}
    found = _bfs_witness(aut, targets)
    witness = (found[0], found[1][0]) if found else ()
    return Verdict.failure("a non-contractive identifier is reachable", witness=witness, bad=bad)
