"""Conversions between system classes, and duality."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .core import (
    END,
    Call,
    Choice,
    End,
    Equation,
    EquationSystem,
    Msg,
    MsgCF,
    Nat,
    Seq,
    ShadesError,
    Skip,
    SystemClass,
    TypeExpr,
    TypeVar,
    Word,
    fresh_name,
    map_calls,
    require_valid,
)


class NotContractive(ShadesError):
    pass


class ConversionError(ShadesError):
    pass


def _expect(sys: EquationSystem, *classes: SystemClass) -> None:
    require_valid(sys)
    if sys.cls not in classes:
        names = ", ".join(c.value for c in classes)
        raise ConversionError(f"expected a {names} system, got {sys.cls.value}")


# ---------------------------------------------------------------- simple embeddings


def rec_to_onecounter(sys: EquationSystem) -> EquationSystem:
    """Thread an untouched counter through every constructor."""
    _expect(sys, SystemClass.RECURSIVE, SystemClass.FINITE)

    def with_param(param):
        return lambda c: Call(c.ctor, param)

    eqs = []
    for eq in sys.equations:
        eqs.append(Equation(eq.ctor, Nat(0), map_calls(eq.body, with_param(Nat(0)))))
        eqs.append(Equation(eq.ctor, Nat(1, "N"), map_calls(eq.body, with_param(Nat(1, "N")))))
    root = map_calls(sys.root, with_param(Nat(0)))
    return EquationSystem(SystemClass.ONE_COUNTER, tuple(eqs), root, (), sys.name)


def onecounter_to_pushdown(sys: EquationSystem) -> EquationSystem:
    """A counter is a stack over a single symbol ``u``."""
    _expect(sys, SystemClass.ONE_COUNTER)

    def word(n: Nat) -> Word:
        return Word(("u",) * n.succs, "S" if n.var else None)

    eqs = [
        Equation(eq.ctor, word(eq.pattern), map_calls(eq.body, lambda c: Call(c.ctor, word(c.param))))
        for eq in sys.equations
    ]
    root = map_calls(sys.root, lambda c: Call(c.ctor, word(c.param)))
    return EquationSystem(SystemClass.PUSHDOWN, tuple(eqs), root, ("u",), sys.name)


# ---------------------------------------------------------------- context-free systems


def cf_normal_form(sys: EquationSystem) -> EquationSystem:
    """Every body becomes ``skip``, ``!X``/``?X``, a choice of variables,
    ``X; Y`` or a variable, using fresh variables for nested subterms."""
    _expect(sys, SystemClass.CONTEXT_FREE)
    taken = set(sys.ctors)
    eqs: list[Equation] = []

    def shallow(e: TypeExpr, owner: str) -> TypeExpr:
        if isinstance(e, MsgCF):
            return MsgCF(e.polarity, var(e.payload, owner))
        if isinstance(e, Choice):
            return Choice(e.view, tuple((l, var(b, owner)) for l, b in e.branches))
        if isinstance(e, Seq):
            return Seq(var(e.left, owner), var(e.right, owner))
        return e

    def var(e: TypeExpr, owner: str) -> Call:
        if isinstance(e, Call):
            return e
        name = fresh_name(owner, taken)
        eqs.append(Equation(name, None, shallow(e, name)))
        return Call(name)

    for eq in sys.equations:
        eqs.append(Equation(eq.ctor, None, shallow(eq.body, eq.ctor)))
    root = var(sys.root, "Main")
    return EquationSystem(SystemClass.CONTEXT_FREE, tuple(eqs), root, (), sys.name)


def _symbol_names(names, reserved=("eps", "S")) -> dict[str, str]:
    """Stack-symbol spelling for each name, avoiding parser keywords."""
    taken = set(names) | set(reserved)
    out = {}
    for n in names:
        out[n] = fresh_name(n, taken) if n in reserved else n
    return out


def cf_to_pushdown(sys: EquationSystem, ctor: str = "X") -> EquationSystem:
    """A single pushdown constructor whose stack holds pending variables."""
    _expect(sys, SystemClass.CONTEXT_FREE)
    from .analysis import check_contractive_cf

    verdict = check_contractive_cf(sys)
    if not verdict.ok:
        raise NotContractive(f"not contractive: {', '.join(verdict.witness)}")
    nf = cf_normal_form(sys)
    sym = _symbol_names(nf.ctors)

    def w(*names: str, rest: bool = True) -> Call:
        return Call(ctor, Word(tuple(sym[n] for n in names), "S" if rest else None))

    eqs = [Equation(ctor, Word(), END)]
    for eq in nf.equations:
        b = eq.body
        if isinstance(b, Skip):
            rhs = Call(ctor, Word((), "S"))
        elif isinstance(b, MsgCF):
            rhs = Msg(b.polarity, w(b.payload.ctor, rest=False), Call(ctor, Word((), "S")))
        elif isinstance(b, Choice):
            rhs = Choice(b.view, tuple((l, w(x.ctor)) for l, x in b.branches))
        elif isinstance(b, Seq):
            rhs = w(b.left.ctor, b.right.ctor)
        else:
            rhs = w(b.ctor)
        eqs.append(Equation(ctor, Word((sym[eq.ctor],), "S"), rhs))
    root = w(nf.root.ctor, rest=False)
    return EquationSystem(SystemClass.PUSHDOWN, tuple(eqs), root, tuple(sym.values()), sys.name)


# ---------------------------------------------------------------- pushdown and nested


def pushdown_to_nested(sys: EquationSystem) -> EquationSystem:
    """One nested constructor per (pushdown constructor, stack top).

    ``X(eps)`` becomes the nullary ``X_eps``; ``X(a S)`` becomes ``X_a`` taking
    one argument per pushdown constructor, standing for how each of them
    continues on the rest of the stack.
    """
    _expect(sys, SystemClass.PUSHDOWN)
    ctors = sys.ctors
    n = len(ctors)
    taken: set[str] = set()
    names: dict[tuple, str] = {}
    for x in ctors:
        for key in (None,) + sys.stack:
            base = f"{x}_{'eps' if key is None else key}"
            name = base if base not in taken else fresh_name(base, taken)
            taken.add(name)
            names[(x, key)] = name
    alphas = tuple(f"a{i}" for i in range(1, n + 1))
    var_base = tuple(TypeVar(a) for a in alphas)
    eps_base = tuple(Call(names[(x, None)], ()) for x in ctors)

    def encode(i: int, word: tuple, base: tuple) -> TypeExpr:
        if not word:
            return base[i]
        inner = tuple(encode(j, word[1:], base) for j in range(n))
        return Call(names[(ctors[i], word[0])], inner)

    def call(c: Call) -> TypeExpr:
        base = var_base if c.param.var else eps_base
        return encode(ctors.index(c.ctor), c.param.symbols, base)

    eqs = []
    for x in ctors:
        for key in (None,) + sys.stack:
            eq = sys.equation_for(x, key)
            name = names[(x, key)]
            pattern = () if key is None else alphas
            if eq is None:
                body: TypeExpr = Call(name, tuple(TypeVar(a) for a in pattern))
            else:
                body = map_calls(eq.body, call)
            eqs.append(Equation(name, pattern, body))
    root = map_calls(sys.root, call)
    return EquationSystem(SystemClass.NESTED, tuple(eqs), root, (), sys.name)


@dataclass(frozen=True)
class _Tuple:
    items: tuple  # TypeExpr or None per position


def _positional(eq: Equation) -> TypeExpr:
    """Body with type variables renamed ``a1 .. ak`` by position."""
    from .core import substitute

    return substitute(eq.body, {v: TypeVar(f"a{i}") for i, v in enumerate(eq.pattern, 1)})


def _map_leaves(e: TypeExpr, fn) -> TypeExpr:
    """Replace maximal calls and type variables."""
    if isinstance(e, (Call, TypeVar)):
        return fn(e)
    if isinstance(e, Msg):
        return Msg(e.polarity, _map_leaves(e.payload, fn), _map_leaves(e.cont, fn))
    if isinstance(e, Choice):
        return Choice(e.view, tuple((l, _map_leaves(b, fn)) for l, b in e.branches))
    return e


def describe_symbol(sym) -> str:
    from .surface import print_expr

    if isinstance(sym, _Tuple):
        return "(" + ", ".join("eps" if x is None else print_expr(x) for x in sym.items) + ")"
    return print_expr(sym)


def nested_to_pushdown_with_table(sys: EquationSystem) -> tuple[EquationSystem, dict[str, object]]:
    """Pushdown system for a nested one, plus the meaning of each stack symbol.

    Table values are type expressions (over positional variables ``a1 ..``)
    or tuples of them; use :func:`describe_symbol` to print them.
    """
    _expect(sys, SystemClass.NESTED)
    n = max((sys.arity(x) for x in sys.ctors), default=0)
    if n <= 1:
        return _nested_unary(sys)
    bodies = {x: _positional(sys.equations_of(x)[0]) for x in sys.ctors}
    ctors = tuple(f"X{i}" for i in range(1, n + 1))
    ids: dict[object, str] = {}
    queue: deque = deque()

    def sym(s) -> str:
        if s not in ids:
            ids[s] = f"{'t' if isinstance(s, _Tuple) else 'e'}{len(ids)}"
            queue.append(s)
        return ids[s]

    def push(under: tuple[str, ...], rest: bool):
        return lambda leaf: Call(ctors[0], Word((sym(leaf),) + under, "S" if rest else None))

    root = _map_leaves(sys.root, push((), False))
    eqs: list[Equation] = []
    while queue:
        s = queue.popleft()
        name = ids[s]
        pattern = Word((name,), "S")
        if isinstance(s, _Tuple):
            for j, item in enumerate(s.items):
                rhs = END if item is None else Call(ctors[0], Word((sym(item),), "S"))
                eqs.append(Equation(ctors[j], pattern, rhs))
            continue
        if isinstance(s, TypeVar):
            j = int(s.name[1:]) - 1
            eqs.append(Equation(ctors[0], pattern, Call(ctors[j], Word((), "S"))))
        else:
            args = tuple(s.param) + (None,) * (n - len(s.param))
            frame = sym(_Tuple(args))
            eqs.append(Equation(ctors[0], pattern, _map_leaves(bodies[s.ctor], push((frame,), True))))
        for other in ctors[1:]:
            eqs.append(Equation(other, pattern, END))
    eqs.extend(Equation(x, Word(), END) for x in ctors)
    table = {v: k for k, v in ids.items()}
    return EquationSystem(SystemClass.PUSHDOWN, tuple(eqs), root, tuple(ids.values()), sys.name), table


def _nested_unary(sys: EquationSystem) -> tuple[EquationSystem, dict[str, object]]:
    ctor = "X"
    sym = _symbol_names(sys.ctors)

    def chain(e: TypeExpr, rest: bool) -> Call:
        word = []
        while isinstance(e, Call) and e.param:
            word.append(sym[e.ctor])
            e = e.param[0]
        if isinstance(e, TypeVar):
            return Call(ctor, Word(tuple(word), "S"))
        word.append(sym[e.ctor])
        return Call(ctor, Word(tuple(word), "S" if rest else None))

    eqs = [Equation(ctor, Word(), END)]
    for eq in sys.equations:
        body = _map_leaves(_positional(eq), lambda leaf: chain(leaf, True))
        eqs.append(Equation(ctor, Word((sym[eq.ctor],), "S"), body))
    root = _map_leaves(sys.root, lambda leaf: chain(leaf, False))
    table = {v: Call(k, ()) for k, v in sym.items()}
    return EquationSystem(SystemClass.PUSHDOWN, tuple(eqs), root, tuple(sym.values()), sys.name), table


def nested_to_pushdown(sys: EquationSystem) -> EquationSystem:
    return nested_to_pushdown_with_table(sys)[0]


# ---------------------------------------------------------------- duality


def dual_name(ctor: str, taken: set[str]) -> str:
    name = f"{ctor}_dual"
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def dualize(sys: EquationSystem) -> EquationSystem:
    """Add a dual constructor for every constructor and dualize the root.

    Polarities and choice views flip along continuations; message payloads
    are left untouched.
    """
    require_valid(sys)
    if sys.cls is SystemClass.CONTEXT_FREE:
        sys = cf_to_pushdown(sys)
    elif sys.cls is SystemClass.NESTED:
        sys = nested_to_pushdown(sys)
    taken = set(sys.ctors)
    bar = {x: dual_name(x, taken) for x in sys.ctors}

    def dual(e: TypeExpr) -> TypeExpr:
        if isinstance(e, End):
            return e
        if isinstance(e, Msg):
            return Msg(e.polarity.dual(), e.payload, dual(e.cont))
        if isinstance(e, Choice):
            return Choice(e.view.dual(), tuple((l, dual(b)) for l, b in e.branches))
        if isinstance(e, Call):
            return Call(bar[e.ctor], e.param)
        raise ConversionError(f"cannot dualize {type(e).__name__}")

    eqs = list(sys.equations) + [Equation(bar[eq.ctor], eq.pattern, dual(eq.body)) for eq in sys.equations]
    return sys.replace(equations=tuple(eqs), root=dual(sys.root))
