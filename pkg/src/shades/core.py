"""Abstract syntax of parameterized session-type equation systems.

A system is a set of equations ``X(pattern) = body`` over one of seven
classes, plus a root expression.  Parameters are natural numbers (one or two
counters), stack words, or type arguments, depending on the class.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterator, Mapping, Union


class SystemClass(str, Enum):
    FINITE = "finite"
    RECURSIVE = "recursive"
    ONE_COUNTER = "onecounter"
    CONTEXT_FREE = "contextfree"
    PUSHDOWN = "pushdown"
    NESTED = "nested"
    TWO_COUNTER = "twocounter"

    @property
    def counters(self) -> int:
        return {SystemClass.ONE_COUNTER: 1, SystemClass.TWO_COUNTER: 2}.get(self, 0)


class Polarity(str, Enum):
    IN = "?"
    OUT = "!"

    def dual(self) -> "Polarity":
        return Polarity.OUT if self is Polarity.IN else Polarity.IN


class View(str, Enum):
    EXTERNAL = "&"
    INTERNAL = "+"

    def dual(self) -> "View":
        return View.INTERNAL if self is View.EXTERNAL else View.EXTERNAL


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True, order=True)
class Nat:
    """``s^succs z`` when ``var`` is None, otherwise ``s^succs var``.

    As an equation pattern, ``Nat(0)`` is ``z``, ``Nat(1, "N")`` is ``s N`` and
    ``Nat(0, "N")`` is a bare variable (allowed in two-counter patterns only).
    """

    succs: int = 0
    var: str | None = None

    @property
    def closed(self) -> bool:
        return self.var is None


@dataclass(frozen=True, order=True)
class Word:
    """A stack word, top first, optionally followed by the rest variable."""

    symbols: tuple[str, ...] = ()
    var: str | None = None

    @property
    def closed(self) -> bool:
        return self.var is None


@dataclass(frozen=True, order=True)
class NatPair:
    first: Nat
    second: Nat

    def __iter__(self) -> Iterator[Nat]:
        yield self.first
        yield self.second


# ---------------------------------------------------------------- type expressions


class TypeExpr:
    __slots__ = ()


@dataclass(frozen=True)
class End(TypeExpr):
    pass


@dataclass(frozen=True)
class Skip(TypeExpr):
    pass


@dataclass(frozen=True)
class Msg(TypeExpr):
    polarity: Polarity
    payload: TypeExpr
    cont: TypeExpr


@dataclass(frozen=True)
class MsgCF(TypeExpr):
    polarity: Polarity
    payload: TypeExpr


@dataclass(frozen=True)
class Choice(TypeExpr):
    view: View
    branches: tuple[tuple[str, TypeExpr], ...]

    def __post_init__(self) -> None:
        branches = tuple(sorted(self.branches, key=lambda b: b[0]))
        labels = [label for label, _ in branches]
        if not labels:
            raise ValueError("a choice needs at least one branch")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate choice label in {labels}")
        object.__setattr__(self, "branches", branches)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.branches)

    def branch(self, label: str) -> TypeExpr:
        return dict(self.branches)[label]


@dataclass(frozen=True)
class Seq(TypeExpr):
    left: TypeExpr
    right: TypeExpr


Param = Union[None, Nat, Word, NatPair, tuple]


@dataclass(frozen=True)
class Call(TypeExpr):
    """Constructor application.  ``param`` depends on the system class:
    None, :class:`Nat`, :class:`Word`, :class:`NatPair`, or a tuple of
    type expressions for nested systems."""

    ctor: str
    param: Param = None


@dataclass(frozen=True)
class TypeVar(TypeExpr):
    name: str


END = End()
SKIP = Skip()

Pattern = Union[None, Nat, Word, NatPair, tuple]


@dataclass(frozen=True)
class Equation:
    ctor: str
    pattern: Pattern
    body: TypeExpr


# ---------------------------------------------------------------- errors


class ShadesError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(ShadesError):
    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


class UnboundVariable(ShadesError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check: ``ok``, ``fail`` or ``unknown``."""

    status: str
    reason: str = ""
    witness: tuple = ()
    violations: tuple[Violation, ...] = ()
    bad: frozenset = frozenset()
    fuel: int | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def success(cls, **kw) -> "Verdict":
        return cls("ok", **kw)

    @classmethod
    def failure(cls, reason: str, **kw) -> "Verdict":
        return cls("fail", reason, **kw)

    @classmethod
    def unknown(cls, reason: str, **kw) -> "Verdict":
        return cls("unknown", reason, **kw)


# ---------------------------------------------------------------- pattern helpers


def pattern_vars(pattern: Pattern) -> tuple[str, ...]:
    if pattern is None:
        return ()
    if isinstance(pattern, (Nat, Word)):
        return (pattern.var,) if pattern.var else ()
    if isinstance(pattern, NatPair):
        return pattern_vars(pattern.first) + pattern_vars(pattern.second)
    return tuple(pattern)


def nat_shapes(p: Nat) -> tuple[str, ...]:
    """Zero/nonzero shapes matched by a counter pattern component."""
    if p.var is None:
        return ("z",)
    return ("s",) if p.succs else ("z", "s")


def pattern_keys(pattern: Pattern) -> tuple:
    """Memory tests a pattern covers (``'z'``/``'s'``, a stack top or None)."""
    if pattern is None or isinstance(pattern, tuple):
        return (None,)
    if isinstance(pattern, Nat):
        return nat_shapes(pattern)
    if isinstance(pattern, Word):
        return (pattern.symbols[0] if pattern.symbols else None,)
    return tuple((a, b) for a in nat_shapes(pattern.first) for b in nat_shapes(pattern.second))


def value_key(value: Param):
    """Memory test observed by a closed parameter value."""
    if value is None or isinstance(value, tuple):
        return None
    if isinstance(value, Nat):
        return "s" if value.succs else "z"
    if isinstance(value, Word):
        return value.symbols[0] if value.symbols else None
    return (value_key(value.first), value_key(value.second))


def _match_nat(p: Nat, v: Nat, binding: dict) -> bool:
    if p.var is None:
        return v.succs == 0
    if v.succs < p.succs:
        return False
    binding[p.var] = Nat(v.succs - p.succs)
    return True


def match(pattern: Pattern, value: Param) -> dict | None:
    """Bind the pattern's variables against a closed parameter value."""
    binding: dict = {}
    if pattern is None:
        return binding if value is None else None
    if isinstance(pattern, Nat):
        return binding if _match_nat(pattern, value, binding) else None
    if isinstance(pattern, NatPair):
        if _match_nat(pattern.first, value.first, binding) and _match_nat(
            pattern.second, value.second, binding
        ):
            return binding
        return None
    if isinstance(pattern, Word):
        if not pattern.symbols:
            return binding if not value.symbols else None
        if value.symbols[:1] != pattern.symbols[:1]:
            return None
        binding[pattern.var] = Word(value.symbols[1:])
        return binding
    if len(pattern) != len(value):
        return None
    return dict(zip(pattern, value))


def pattern_term(pattern: Pattern) -> Param:
    """The pattern read back as a parameter term (``s N`` stays ``s N``)."""
    if isinstance(pattern, tuple):
        return tuple(TypeVar(v) for v in pattern)
    return pattern


def param_size(value: Param) -> int:
    if value is None:
        return 0
    if isinstance(value, Nat):
        return value.succs
    if isinstance(value, Word):
        return len(value.symbols)
    if isinstance(value, NatPair):
        return value.first.succs + value.second.succs
    return sum(expr_size(e) for e in value)


def expr_size(expr: TypeExpr) -> int:
    return sum(1 for _ in subterms(expr))


def subterms(expr: TypeExpr) -> Iterator[TypeExpr]:
    yield expr
    if isinstance(expr, Msg):
        yield from subterms(expr.payload)
        yield from subterms(expr.cont)
    elif isinstance(expr, MsgCF):
        yield from subterms(expr.payload)
    elif isinstance(expr, Choice):
        for _, b in expr.branches:
            yield from subterms(b)
    elif isinstance(expr, Seq):
        yield from subterms(expr.left)
        yield from subterms(expr.right)
    elif isinstance(expr, Call) and isinstance(expr.param, tuple):
        for a in expr.param:
            yield from subterms(a)


def calls(expr: TypeExpr) -> Iterator[Call]:
    return (t for t in subterms(expr) if isinstance(t, Call))


def free_vars(expr: TypeExpr) -> set[str]:
    out: set[str] = set()
    for t in subterms(expr):
        if isinstance(t, TypeVar):
            out.add(t.name)
        elif isinstance(t, Call) and t.param is not None and not isinstance(t.param, tuple):
            parts = tuple(t.param) if isinstance(t.param, NatPair) else (t.param,)
            out.update(p.var for p in parts if p.var)
    return out


# ---------------------------------------------------------------- substitution


def _subst_nat(n: Nat, binding: Mapping) -> Nat:
    if n.var is None:
        return n
    if n.var not in binding:
        raise UnboundVariable(f"counter variable {n.var} is unbound")
    b = binding[n.var]
    return Nat(n.succs + b.succs, b.var)


def substitute_param(param: Param, binding: Mapping) -> Param:
    if param is None:
        return None
    if isinstance(param, Nat):
        return _subst_nat(param, binding)
    if isinstance(param, NatPair):
        return NatPair(_subst_nat(param.first, binding), _subst_nat(param.second, binding))
    if isinstance(param, Word):
        if param.var is None:
            return param
        if param.var not in binding:
            raise UnboundVariable(f"stack variable {param.var} is unbound")
        b = binding[param.var]
        return Word(param.symbols + b.symbols, b.var)
    return tuple(substitute(a, binding) for a in param)


def substitute(expr: TypeExpr, binding: Mapping) -> TypeExpr:
    """Replace parameter and type variables according to ``binding``."""
    if isinstance(expr, (End, Skip)):
        return expr
    if isinstance(expr, TypeVar):
        if expr.name not in binding:
            raise UnboundVariable(f"type variable {expr.name} is unbound")
        return binding[expr.name]
    if isinstance(expr, Call):
        return Call(expr.ctor, substitute_param(expr.param, binding))
    if isinstance(expr, Msg):
        return Msg(expr.polarity, substitute(expr.payload, binding), substitute(expr.cont, binding))
    if isinstance(expr, MsgCF):
        return MsgCF(expr.polarity, substitute(expr.payload, binding))
    if isinstance(expr, Choice):
        return Choice(expr.view, tuple((l, substitute(b, binding)) for l, b in expr.branches))
    if isinstance(expr, Seq):
        return Seq(substitute(expr.left, binding), substitute(expr.right, binding))
    raise TypeError(f"not a type expression: {expr!r}")


def map_calls(expr: TypeExpr, fn) -> TypeExpr:
    """Rebuild ``expr`` with every maximal :class:`Call` replaced by ``fn(call)``."""
    if isinstance(expr, Call):
        return fn(expr)
    if isinstance(expr, Msg):
        return Msg(expr.polarity, map_calls(expr.payload, fn), map_calls(expr.cont, fn))
    if isinstance(expr, MsgCF):
        return MsgCF(expr.polarity, map_calls(expr.payload, fn))
    if isinstance(expr, Choice):
        return Choice(expr.view, tuple((l, map_calls(b, fn)) for l, b in expr.branches))
    if isinstance(expr, Seq):
        return Seq(map_calls(expr.left, fn), map_calls(expr.right, fn))
    return expr


# ---------------------------------------------------------------- systems


def _pattern_order(pattern: Pattern):
    if pattern is None:
        return ()
    if isinstance(pattern, Nat):
        return (pattern.var is not None and pattern.succs == 0, pattern.succs)
    if isinstance(pattern, Word):
        return (len(pattern.symbols), pattern.symbols)
    if isinstance(pattern, NatPair):
        return (_pattern_order(pattern.first), _pattern_order(pattern.second))
    return (len(pattern),)


@dataclass(frozen=True)
class EquationSystem:
    cls: SystemClass
    equations: tuple[Equation, ...]
    root: TypeExpr
    stack: tuple[str, ...] = ()
    name: str = "main"

    def __post_init__(self) -> None:
        eqs = tuple(sorted(self.equations, key=lambda e: (e.ctor, _pattern_order(e.pattern))))
        object.__setattr__(self, "equations", eqs)
        object.__setattr__(self, "stack", tuple(sorted(set(self.stack))))
        object.__setattr__(self, "cls", SystemClass(self.cls))

    @cached_property
    def _index(self) -> dict[str, list[Equation]]:
        index: dict[str, list[Equation]] = {}
        for eq in self.equations:
            index.setdefault(eq.ctor, []).append(eq)
        return index

    @property
    def ctors(self) -> tuple[str, ...]:
        return tuple(self._index)

    def equations_of(self, ctor: str) -> list[Equation]:
        return self._index.get(ctor, [])

    def arity(self, ctor: str) -> int:
        eqs = self.equations_of(ctor)
        return len(eqs[0].pattern) if eqs and isinstance(eqs[0].pattern, tuple) else 0

    def lookup(self, ctor: str, value: Param) -> tuple[Equation, dict] | None:
        """Find the equation for ``ctor`` applied to a closed parameter."""
        for eq in self.equations_of(ctor):
            binding = match(eq.pattern, value)
            if binding is not None:
                return eq, binding
        return None

    def equation_for(self, ctor: str, key) -> Equation | None:
        """The equation of ``ctor`` whose pattern covers memory test ``key``."""
        for eq in self.equations_of(ctor):
            if key in pattern_keys(eq.pattern):
                return eq
        return None

    def keys(self) -> tuple:
        """All memory tests of the class."""
        c = self.cls
        if c is SystemClass.ONE_COUNTER:
            return ("z", "s")
        if c is SystemClass.TWO_COUNTER:
            return (("z", "z"), ("z", "s"), ("s", "z"), ("s", "s"))
        if c is SystemClass.PUSHDOWN:
            return (None,) + self.stack
        return (None,)

    def with_root(self, root: TypeExpr) -> "EquationSystem":
        return EquationSystem(self.cls, self.equations, root, self.stack, self.name)

    def replace(self, **changes) -> "EquationSystem":
        fields = dict(cls=self.cls, equations=self.equations, root=self.root, stack=self.stack, name=self.name)
        fields.update(changes)
        return EquationSystem(**fields)


def fresh_name(base: str, taken: set[str]) -> str:
    """``base'``, ``base''`` ... the first one not in ``taken`` (which is updated)."""
    name = base + "'"
    while name in taken:
        name += "'"
    taken.add(name)
    return name


# ---------------------------------------------------------------- validation

_CF_ONLY = (Skip, MsgCF, Seq)


def _param_violations(sys: EquationSystem, call: Call, bound: set[str], where: str) -> list[Violation]:
    out: list[Violation] = []
    c, p = sys.cls, call.param
    if call.ctor not in sys._index:
        out.append(Violation("UndeclaredCtor", f"{where}: {call.ctor} has no equation"))
    expected = {
        SystemClass.ONE_COUNTER: Nat,
        SystemClass.TWO_COUNTER: NatPair,
        SystemClass.PUSHDOWN: Word,
        SystemClass.NESTED: tuple,
    }.get(c, type(None))
    if not isinstance(p, expected):
        kind = "WrongClassConstruct" if p is not None else "ArityMismatch"
        what = "no parameter" if expected is type(None) else f"a {expected.__name__} parameter"
        out.append(Violation(kind, f"{where}: {call.ctor} takes {what} in a {c.value} system"))
        return out
    if c is SystemClass.NESTED and call.ctor in sys._index and len(p) != sys.arity(call.ctor):
        out.append(
            Violation("ArityMismatch", f"{where}: {call.ctor} has arity {sys.arity(call.ctor)}, got {len(p)}")
        )
    if c is SystemClass.PUSHDOWN:
        unknown = [s for s in p.symbols if s not in sys.stack]
        if unknown:
            out.append(Violation("UndeclaredSymbol", f"{where}: stack symbols {unknown} not declared"))
    parts = tuple(p) if isinstance(p, NatPair) else (p,) if isinstance(p, (Nat, Word)) else ()
    for part in parts:
        if part.var and part.var not in bound:
            out.append(Violation("UnboundVariable", f"{where}: {part.var} is not bound by the pattern"))
    return out


def _pattern_violations(sys: EquationSystem, eq: Equation) -> list[Violation]:
    c, p, where = sys.cls, eq.pattern, f"equation for {eq.ctor}"
    bad = Violation("WrongClassConstruct", f"{where}: pattern {p!r} not allowed in class {c.value}")
    if c in (SystemClass.RECURSIVE, SystemClass.CONTEXT_FREE):
        return [] if p is None else [bad]
    if c is SystemClass.FINITE:
        return [Violation("WrongClassConstruct", "finite systems have no equations")]
    if c is SystemClass.ONE_COUNTER:
        ok = isinstance(p, Nat) and (p == Nat(0) or (p.succs == 1 and p.var is not None))
        return [] if ok else [bad]
    if c is SystemClass.TWO_COUNTER:
        if not isinstance(p, NatPair):
            return [bad]
        ok = all(
            (n.var is None and n.succs == 0) or (n.var is not None and n.succs in (0, 1)) for n in p
        )
        if not ok:
            return [bad]
        if p.first.var and p.first.var == p.second.var:
            return [Violation("DuplicateVariable", f"{where}: {p.first.var} bound twice")]
        return []
    if c is SystemClass.PUSHDOWN:
        if not isinstance(p, Word):
            return [bad]
        if p.symbols == () and p.var is None:
            return []
        if len(p.symbols) == 1 and p.var:
            if p.symbols[0] not in sys.stack:
                return [Violation("UndeclaredSymbol", f"{where}: {p.symbols[0]} not declared")]
            return []
        return [bad]
    if c is SystemClass.NESTED:
        if not isinstance(p, tuple) or not all(isinstance(v, str) for v in p):
            return [bad]
        if len(set(p)) != len(p):
            return [Violation("DuplicateVariable", f"{where}: repeated type variable")]
        return []
    return [bad]


def _expr_violations(sys: EquationSystem, expr: TypeExpr, bound: set[str], where: str) -> list[Violation]:
    out: list[Violation] = []
    cf = sys.cls is SystemClass.CONTEXT_FREE
    for t in subterms(expr):
        if isinstance(t, _CF_ONLY) and not cf:
            out.append(Violation("WrongClassConstruct", f"{where}: {type(t).__name__} needs a context-free system"))
        elif isinstance(t, (End, Msg)) and cf:
            out.append(Violation("WrongClassConstruct", f"{where}: {type(t).__name__} is not context-free syntax"))
        elif isinstance(t, TypeVar):
            if sys.cls is not SystemClass.NESTED:
                out.append(Violation("WrongClassConstruct", f"{where}: type variable {t.name} outside a nested system"))
            elif t.name not in bound:
                out.append(Violation("UnboundVariable", f"{where}: type variable {t.name} is not bound"))
        elif isinstance(t, Call):
            if sys.cls is SystemClass.FINITE:
                out.append(Violation("WrongClassConstruct", f"{where}: finite types have no constructors"))
            else:
                out.extend(_param_violations(sys, t, bound, where))
    return out


def validate_system(sys: EquationSystem) -> Verdict:
    """Check class discipline, arities, variable scoping and duplicates."""
    violations: list[Violation] = []
    seen: dict[tuple, Equation] = {}
    for eq in sys.equations:
        pv = _pattern_violations(sys, eq)
        violations.extend(pv)
        if pv:
            continue
        for key in pattern_keys(eq.pattern):
            if (eq.ctor, key) in seen:
                violations.append(Violation("DuplicateEquation", f"{eq.ctor} has two equations covering {key!r}"))
            seen[(eq.ctor, key)] = eq
        if sys.cls is SystemClass.NESTED and len({len(e.pattern) for e in sys.equations_of(eq.ctor)}) > 1:
            violations.append(Violation("ArityMismatch", f"{eq.ctor} declared with different arities"))
        bound = set(pattern_vars(eq.pattern))
        violations.extend(_expr_violations(sys, eq.body, bound, f"equation for {eq.ctor}"))
    violations.extend(_expr_violations(sys, sys.root, set(), "root"))
    if violations:
        unique = tuple(dict.fromkeys(violations))
        return Verdict.failure(unique[0].kind, violations=unique)
    return Verdict.success()


def require_valid(sys: EquationSystem) -> EquationSystem:
    verdict = validate_system(sys)
    if not verdict.ok:
        raise ValidationError(list(verdict.violations))
    return sys
