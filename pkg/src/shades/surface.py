"""Text formats: ``.st`` equation systems and ``.aut`` automata.

System files::

    system onecounter
    type counter = X(z)
    X(z) = &{inc: X(s z), dump: Y(z)}
    X(s N) = &{inc: X(s s N), dump: Y(s N)}
    Y(z) = end
    Y(s N) = !end.Y(N)

Automaton files::

    automaton onecounter
    states qX qY qZ qend
    initial qX 0
    accepting qX qY qZ qend
    qX, *, &[dump,inc]:inc -> +, qX

``#`` starts a comment.  Newlines separate statements except inside brackets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .automata import Automaton, AutomatonError, Model, Nondeterministic
from .core import (
    END,
    SKIP,
    Call,
    Choice,
    End,
    Equation,
    EquationSystem,
    Msg,
    MsgCF,
    Nat,
    NatPair,
    Polarity,
    Seq,
    ShadesError,
    Skip,
    SystemClass,
    TypeExpr,
    TypeVar,
    View,
    Word,
    require_valid,
)
from .semantics import SymbolError, parse_symbol


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class ParseError(ShadesError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


# ---------------------------------------------------------------- lexer

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<punct>[(){},:;.?!&+=])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    opened: list[Token] = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            span = SourceSpan(pos, pos + 1, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        span = SourceSpan(pos, m.end(), line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            if not opened and tokens and tokens[-1].kind != "nl":
                tokens.append(Token("nl", "\n", span))
            line, line_start = line + 1, m.end()
        elif kind == "ident":
            tokens.append(Token("ident", m.group(), span))
        elif kind == "punct":
            ch = m.group()
            tok = Token(ch, ch, span)
            if ch in "({":
                opened.append(tok)
            elif ch in ")}" and opened:
                opened.pop()
            tokens.append(tok)
        pos = m.end()
    if opened:
        raise ParseError(f"unclosed {opened[-1].text!r}", opened[-1].span)
    if tokens and tokens[-1].kind != "nl":
        tokens.append(Token("nl", "\n", SourceSpan(pos, pos, line, pos - line_start + 1)))
    tokens.append(Token("eof", "", SourceSpan(pos, pos, line, pos - line_start + 1)))
    return tokens


# ---------------------------------------------------------------- system parser

_CLASS_NAMES = {c.value: c for c in SystemClass}


class _SystemParser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.cls: SystemClass | None = None
        self.stack: list[str] = []
        self.declared_stack = False
        self.bound: tuple[str, ...] = ()

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def take(self, kind: str | None = None, text: str | None = None) -> Token:
        t = self.tok
        if (kind and t.kind != kind) or (text and t.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text or t.kind!r}", t.span)
        self.i += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    # statements
    def parse(self) -> EquationSystem:
        name, root = "main", None
        equations: list[Equation] = []
        while self.at("nl"):
            self.take()
        if not (self.at("ident", "system")):
            raise ParseError("a system file starts with 'system <class>'", self.tok.span)
        self.take()
        cls_tok = self.take("ident")
        if cls_tok.text not in _CLASS_NAMES:
            raise ParseError(f"unknown system class {cls_tok.text!r}", cls_tok.span)
        self.cls = _CLASS_NAMES[cls_tok.text]
        self.take("nl")
        while not self.at("eof"):
            if self.at("nl"):
                self.take()
                continue
            head = self.take("ident")
            if head.text == "stack" and not self.at("=") and not self.at("("):
                while self.at("ident"):
                    self.stack.append(self.take().text)
                self.declared_stack = True
            elif head.text == "type" and self.at("ident"):
                if root is not None:
                    raise ParseError("more than one 'type' line", head.span)
                name = self.take().text
                self.take("=")
                self.bound = ()
                root = self.expr()
            else:
                equations.append(self.equation(head))
            if not self.at("eof"):
                self.take("nl")
        if root is None:
            raise ParseError("missing 'type <name> = <expr>' line", self.tok.span)
        return EquationSystem(self.cls, tuple(equations), root, tuple(self.stack), name)

    def equation(self, head: Token) -> Equation:
        pattern = self.pattern(head)
        self.bound = _bound_names(pattern)
        self.take("=")
        body = self.expr()
        return Equation(head.text, pattern, body)

    def pattern(self, head: Token):
        c = self.cls
        if not self.at("("):
            if c is SystemClass.NESTED:
                return ()
            if c in (SystemClass.RECURSIVE, SystemClass.CONTEXT_FREE, SystemClass.FINITE):
                return None
            raise ParseError(f"{head.text} needs a parameter pattern in a {c.value} system", head.span)
        if c is SystemClass.NESTED:
            self.take("(")
            names = [self.take("ident").text]
            while self.at(","):
                self.take()
                names.append(self.take("ident").text)
            self.take(")")
            return tuple(names)
        groups = self.word_groups()
        return self.param_from_groups(groups, head.span, pattern=True)

    def word_groups(self) -> list[list[Token]]:
        self.take("(")
        groups: list[list[Token]] = [[]]
        while not self.at(")"):
            if self.at(","):
                self.take()
                groups.append([])
            else:
                groups[-1].append(self.take("ident"))
        self.take(")")
        return groups

    def nat(self, toks: list[Token], span, pattern: bool) -> Nat:
        if not toks:
            raise ParseError("empty counter term", span)
        *succs, last = toks
        if any(t.text != "s" for t in succs):
            raise ParseError("a counter term is 's ... s z' or 's ... s N'", toks[0].span)
        if last.text == "z":
            return Nat(len(succs))
        if not pattern and last.text not in self.bound:
            raise ParseError(f"counter variable {last.text} is not bound by the pattern", last.span)
        return Nat(len(succs), last.text)

    def word(self, toks: list[Token], span, pattern: bool) -> Word:
        if [t.text for t in toks] == ["eps"]:
            return Word()
        if not toks:
            raise ParseError("empty stack word; write 'eps'", span)
        names = [t.text for t in toks]
        if pattern:
            if len(names) != 2:
                raise ParseError("a stack pattern is 'eps' or '<symbol> <variable>'", span)
            return Word((names[0],), names[1])
        var = names[-1] if names[-1] in self.bound else None
        syms = tuple(names[:-1] if var else names)
        for t in toks[: len(syms)]:
            if t.text in self.bound:
                raise ParseError(f"stack variable {t.text} must come last", t.span)
            if self.declared_stack and t.text not in self.stack:
                raise ParseError(f"stack symbol {t.text} is not declared", t.span)
            if not self.declared_stack and t.text not in self.stack:
                self.stack.append(t.text)
        return Word(syms, var)

    def param_from_groups(self, groups: list[list[Token]], span, pattern: bool):
        c = self.cls
        if c is SystemClass.ONE_COUNTER and len(groups) == 1:
            return self.nat(groups[0], span, pattern)
        if c is SystemClass.TWO_COUNTER and len(groups) == 2:
            return NatPair(self.nat(groups[0], span, pattern), self.nat(groups[1], span, pattern))
        if c is SystemClass.PUSHDOWN and len(groups) == 1:
            if pattern and len(groups[0]) == 2 and not self.declared_stack and groups[0][0].text not in self.stack:
                self.stack.append(groups[0][0].text)
            return self.word(groups[0], span, pattern)
        raise ParseError(f"wrong parameter shape for a {c.value} system", span)

    # expressions
    def expr(self) -> TypeExpr:
        left = self.prefix()
        if self.at(";"):
            self.take()
            return Seq(left, self.expr())
        return left

    def prefix(self) -> TypeExpr:
        if self.at("?") or self.at("!"):
            pol = Polarity(self.take().text)
            payload = self.atom()
            if self.at("."):
                self.take()
                return Msg(pol, payload, self.prefix())
            return MsgCF(pol, payload)
        return self.atom()

    def atom(self) -> TypeExpr:
        t = self.tok
        if t.kind == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if t.kind in ("&", "+"):
            self.take()
            return self.choice(View(t.kind))
        if t.kind != "ident":
            raise ParseError(f"expected a type, found {t.text or t.kind!r}", t.span)
        self.take()
        if t.text == "end":
            return END
        if t.text == "skip":
            return SKIP
        return self.call(t)

    def choice(self, view: View) -> Choice:
        open_tok = self.take("{")
        branches = []
        while True:
            label = self.take("ident").text
            self.take(":")
            branches.append((label, self.expr()))
            if self.at("}"):
                break
            self.take(",")
        self.take("}")
        try:
            return Choice(view, tuple(branches))
        except ValueError as exc:
            raise ParseError(str(exc), open_tok.span) from None

    def call(self, head: Token) -> TypeExpr:
        c = self.cls
        if c is SystemClass.NESTED:
            if not self.at("("):
                return TypeVar(head.text) if head.text in self.bound else Call(head.text, ())
            self.take("(")
            args = [self.expr()]
            while self.at(","):
                self.take()
                args.append(self.expr())
            self.take(")")
            return Call(head.text, tuple(args))
        if not self.at("("):
            if c in (SystemClass.RECURSIVE, SystemClass.CONTEXT_FREE, SystemClass.FINITE):
                return Call(head.text)
            raise ParseError(f"{head.text} needs an argument in a {c.value} system", head.span)
        if c in (SystemClass.RECURSIVE, SystemClass.CONTEXT_FREE, SystemClass.FINITE):
            raise ParseError(f"constructors take no arguments in a {c.value} system", head.span)
        return Call(head.text, self.param_from_groups(self.word_groups(), head.span, pattern=False))


def _bound_names(pattern) -> tuple[str, ...]:
    if pattern is None:
        return ()
    if isinstance(pattern, tuple):
        return pattern
    if isinstance(pattern, NatPair):
        return tuple(p.var for p in pattern if p.var)
    return (pattern.var,) if pattern.var else ()


def parse_system(text: str, validate: bool = True) -> EquationSystem:
    """Parse ``.st`` text.  With ``validate`` the result is also checked."""
    sys = _SystemParser(text).parse()
    return require_valid(sys) if validate else sys


def parse_expr(text: str, sys: EquationSystem) -> TypeExpr:
    """Parse a closed type expression in the syntax of ``sys``'s class."""
    p = _SystemParser(text)
    p.cls, p.stack, p.declared_stack = sys.cls, list(sys.stack), True
    e = p.expr()
    while p.at("nl"):
        p.take()
    p.take("eof")
    return e


# ---------------------------------------------------------------- system printer


def print_param(param) -> str:
    if param is None:
        return ""
    if isinstance(param, Nat):
        return " ".join(["s"] * param.succs + [param.var or "z"])
    if isinstance(param, NatPair):
        return f"{print_param(param.first)}, {print_param(param.second)}"
    if isinstance(param, Word):
        parts = list(param.symbols) + ([param.var] if param.var else [])
        return " ".join(parts) if parts else "eps"
    if all(isinstance(p, str) for p in param):
        return ", ".join(param)
    return ", ".join(print_expr(a) for a in param)


def _wrapped(expr: TypeExpr) -> str:
    text = print_expr(expr)
    return f"({text})" if isinstance(expr, (Msg, MsgCF, Seq)) else text


def print_expr(expr: TypeExpr) -> str:
    if isinstance(expr, End):
        return "end"
    if isinstance(expr, Skip):
        return "skip"
    if isinstance(expr, TypeVar):
        return expr.name
    if isinstance(expr, Call):
        inner = print_param(expr.param)
        return f"{expr.ctor}({inner})" if inner else expr.ctor
    if isinstance(expr, Msg):
        cont = print_expr(expr.cont)
        if isinstance(expr.cont, Seq):
            cont = f"({cont})"
        return f"{expr.polarity.value}{_wrapped(expr.payload)}.{cont}"
    if isinstance(expr, MsgCF):
        return f"{expr.polarity.value}{_wrapped(expr.payload)}"
    if isinstance(expr, Choice):
        inner = ", ".join(f"{l}: {print_expr(b)}" for l, b in expr.branches)
        return f"{expr.view.value}{{{inner}}}"
    if isinstance(expr, Seq):
        left = print_expr(expr.left)
        if isinstance(expr.left, Seq):
            left = f"({left})"
        return f"{left}; {print_expr(expr.right)}"
    raise TypeError(f"not a type expression: {expr!r}")


def print_equation(eq: Equation) -> str:
    inner = print_param(eq.pattern)
    lhs = f"{eq.ctor}({inner})" if inner else eq.ctor
    return f"{lhs} = {print_expr(eq.body)}"


def print_system(sys: EquationSystem) -> str:
    lines = [f"system {sys.cls.value}"]
    if sys.cls is SystemClass.PUSHDOWN or sys.stack:
        lines.append(" ".join(["stack", *sys.stack]).rstrip())
    lines.append(f"type {sys.name} = {print_expr(sys.root)}")
    lines.extend(print_equation(eq) for eq in sys.equations)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- automaton format


def _line_span(text: str, lineno: int) -> SourceSpan:
    lines = text.splitlines(keepends=True)
    start = sum(len(l) for l in lines[: lineno - 1])
    return SourceSpan(start, start + len(lines[lineno - 1].rstrip("\n")), lineno, 1)


def _split_top(text: str, sep: str = ",") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


def _pair(text: str) -> list[str]:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    return [p.strip() for p in text.split(",")]


def _parse_test(model: Model, text: str, stack) -> tuple:
    if text == "*":
        return ("*",)
    if model is Model.FSA:
        raise AutomatonError(f"finite automata use '*' as test, got {text!r}")
    if model is Model.ONE_COUNTER:
        if text not in ("z", "s"):
            raise AutomatonError(f"counter test must be z or s, got {text!r}")
        return (text,)
    if model is Model.TWO_COUNTER:
        pair = tuple(_pair(text))
        if len(pair) != 2 or not set(pair) <= {"z", "s"}:
            raise AutomatonError(f"two-counter test must look like (z,s), got {text!r}")
        return (pair,)
    return (None,) if text == "eps" else (text,)


def _parse_op(model: Model, text: str):
    if model is Model.TWO_COUNTER:
        op = tuple(_pair(text))
        if len(op) != 2:
            raise AutomatonError(f"two-counter operation must look like (+,=), got {text!r}")
        return op
    return text


def _parse_memory(model: Model, parts: list[str]):
    if model is Model.FSA:
        if parts:
            raise AutomatonError("finite automata have no initial memory")
        return None
    if model is Model.ONE_COUNTER:
        return int(parts[0]) if parts else 0
    if model is Model.TWO_COUNTER:
        if not parts:
            return (0, 0)
        vals = _pair(" ".join(parts))
        return (int(vals[0]), int(vals[1]))
    if not parts or parts == ["eps"]:
        return ()
    return tuple(parts)


def parse_automaton(text: str) -> Automaton:
    model = None
    states: list[str] = []
    stack: list[str] = []
    accepting: list[str] = []
    initial, memory_parts = None, []
    transitions: dict = {}
    pending: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        try:
            if model is None:
                if head != "automaton":
                    raise AutomatonError("an automaton file starts with 'automaton <model>'")
                model = Model(rest.strip())
            elif "->" in line:
                pending.append((lineno, line))
            elif head == "states":
                states.extend(rest.split())
            elif head == "stack":
                stack.extend(rest.split())
            elif head == "accepting":
                accepting.extend(rest.split())
            elif head == "initial":
                initial, *memory_parts = rest.split()
            else:
                raise AutomatonError(f"unknown directive {head!r}")
        except (AutomatonError, ValueError) as exc:
            raise ParseError(str(exc), _line_span(text, lineno)) from None
    if model is None or initial is None:
        raise ParseError("missing 'automaton' or 'initial' line")
    probe = Automaton(model, tuple(states), initial, None, frozenset(), {}, tuple(stack))
    for lineno, line in pending:
        try:
            left, right = line.split("->", 1)
            parts = _split_top(left)
            if len(parts) != 3:
                raise AutomatonError("a transition is 'state, test, input -> op, state'")
            q, test_text, input_text = parts
            op_text, q2 = [p.strip() for p in right.rsplit(",", 1)]
            symbol = None if input_text == "eps" else parse_symbol(input_text)
            tests = _parse_test(model, test_text, stack)
            if tests == ("*",):
                tests = probe.tests()
            op = _parse_op(probe.model, op_text)
            for t in tests:
                key = (q, t, symbol)
                if key in transitions:
                    raise Nondeterministic(f"two transitions for {q}, {test_text}, {input_text}")
                transitions[key] = (op, q2)
        except (AutomatonError, SymbolError, ValueError) as exc:
            if isinstance(exc, Nondeterministic):
                raise
            raise ParseError(str(exc), _line_span(text, lineno)) from None
    try:
        memory = _parse_memory(probe.model, memory_parts)
        return Automaton(model, tuple(states), initial, memory, frozenset(accepting), transitions, tuple(stack))
    except (AutomatonError, ValueError) as exc:
        if isinstance(exc, Nondeterministic):
            raise
        raise ParseError(str(exc)) from None


def _print_test(model: Model, t) -> str:
    if model is Model.FSA:
        return "*"
    if model is Model.TWO_COUNTER:
        return f"({t[0]},{t[1]})"
    return "eps" if t is None else t


def _print_op(op) -> str:
    return f"({op[0]},{op[1]})" if isinstance(op, tuple) else op


def _print_memory(aut: Automaton) -> str:
    m, mem = aut.model, aut.memory
    if m is Model.FSA:
        return ""
    if m is Model.ONE_COUNTER:
        return f" {mem}"
    if m is Model.TWO_COUNTER:
        return f" {mem[0]},{mem[1]}"
    return " " + (" ".join(mem) if mem else "eps")


def print_automaton(aut: Automaton) -> str:
    lines = [f"automaton {aut.model.value}"]
    if aut.model is Model.PUSHDOWN:
        lines.append(" ".join(["stack", *aut.stack]).rstrip())
    lines.append("states " + " ".join(aut.states))
    lines.append(f"initial {aut.initial}{_print_memory(aut)}")
    lines.append("accepting " + " ".join(q for q in aut.states if q in aut.accepting))
    order = {q: i for i, q in enumerate(aut.states)}
    tests = {t: i for i, t in enumerate(aut.tests())}

    def key(item):
        (q, t, a), _ = item
        return (order[q], tests[t], a is not None, a or "")

    for (q, t, a), (op, q2) in sorted(aut.transitions.items(), key=key):
        lines.append(f"{q}, {_print_test(aut.model, t)}, {a or 'eps'} -> {_print_op(op)}, {q2}")
    return "\n".join(lines) + "\n"
