"""Trace semantics by direct unfolding of equations.

This module is the reference oracle.  It never goes through automata: it
rewrites constructor calls with their equations until a communication
constructor appears, and reads trace symbols off the resulting tree.
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator

from .core import (
    END,
    Call,
    Choice,
    End,
    EquationSystem,
    Msg,
    MsgCF,
    Polarity,
    Seq,
    ShadesError,
    Skip,
    SystemClass,
    TypeExpr,
    TypeVar,
    View,
    expr_size,
    param_size,
    substitute,
)

Word = tuple[str, ...]

END_SYMBOL = "end"
_SYMBOL = re.compile(r"^(?:(end)|([?!])([dc])|([&+])\[([^\]]*)\]:([A-Za-z_][\w']*))$")
_ABBREV = re.compile(r"^([&+])([A-Za-z_][\w']*)$")


class UnfoldError(ShadesError):
    """Head normalization could not reach a communication constructor."""


class NonContractiveLoop(UnfoldError):
    pass


class MissingEquation(UnfoldError):
    pass


class SymbolError(ShadesError):
    pass


# ---------------------------------------------------------------- trace symbols
#
# Symbols are plain strings in canonical spelling: ``?d ?c !d !c end`` and
# ``&[a,b]:a`` / ``+[a,b]:b`` with the label set sorted.


def data_symbol(polarity: Polarity) -> str:
    return f"{polarity.value}d"


def cont_symbol(polarity: Polarity) -> str:
    return f"{polarity.value}c"


def choice_symbol(view: View, labels: Iterable[str], label: str) -> str:
    return f"{view.value}[{','.join(sorted(labels))}]:{label}"


def parse_symbol(text: str) -> str:
    """Validate a symbol spelling and return it in canonical form."""
    m = _SYMBOL.match(text.strip())
    if not m:
        raise SymbolError(f"not a trace symbol: {text!r}")
    if m.group(4):
        labels = [l.strip() for l in m.group(5).split(",") if l.strip()]
        if m.group(6) not in labels or len(set(labels)) != len(labels):
            raise SymbolError(f"malformed choice symbol: {text!r}")
        return choice_symbol(View(m.group(4)), labels, m.group(6))
    return text.strip()


def is_choice(sym: str) -> bool:
    return sym[0] in "&+"


def is_data(sym: str) -> bool:
    return sym in ("?d", "!d")


def choice_parts(sym: str) -> tuple[View, tuple[str, ...], str]:
    head, label = sym.split("]:")
    return View(head[0]), tuple(head[2:].split(",")), label


def abbreviate(sym: str) -> str:
    if is_choice(sym):
        view, _, label = choice_parts(sym)
        return view.value + label
    return sym


def flip_symbol(sym: str) -> str:
    if sym == END_SYMBOL:
        return sym
    if is_choice(sym):
        view, labels, label = choice_parts(sym)
        return choice_symbol(view.dual(), labels, label)
    return Polarity(sym[0]).dual().value + sym[1]


def format_word(word: Word, abbrev: bool = False) -> str:
    if not word:
        return "<eps>"
    return " ".join(abbreviate(s) if abbrev else s for s in word)


def parse_word(line: str) -> Word:
    line = line.strip()
    if line in ("<eps>", ""):
        return ()
    return tuple(parse_symbol(tok) for tok in line.split())


def format_traces(words: Iterable[Word], abbrev: bool = False) -> str:
    return "".join(format_word(w, abbrev) + "\n" for w in sorted(words))


def node_label(node: TypeExpr) -> str:
    if isinstance(node, End):
        return "end"
    if isinstance(node, Msg):
        return node.polarity.value
    if isinstance(node, Choice):
        return f"{node.view.value}[{','.join(node.labels)}]"
    raise TypeError(f"not a head-normal node: {node!r}")


# ---------------------------------------------------------------- head normalization


def _budget(sys: EquationSystem, size: int) -> int:
    return 1000 + 4 * (len(sys.equations) + 1) * (len(sys.stack) + 1) * (size + 1)


def head_normalize(sys: EquationSystem, expr: TypeExpr) -> TypeExpr:
    """Rewrite calls until ``expr`` is ``end``, a message or a choice."""
    if not isinstance(expr, Call):
        if isinstance(expr, TypeVar):
            raise UnfoldError(f"free type variable {expr.name}")
        return expr
    budget = _budget(sys, param_size(expr.param))
    seen: set[TypeExpr] = set()
    while isinstance(expr, Call):
        found = sys.lookup(expr.ctor, expr.param)
        if found is None:
            raise MissingEquation(f"no equation for {expr.ctor} at {expr.param!r}")
        if expr in seen or len(seen) > budget:
            raise NonContractiveLoop(f"trivial rewrites from {expr.ctor} never reach a constructor")
        seen.add(expr)
        eq, binding = found
        expr = substitute(eq.body, binding)
    if isinstance(expr, TypeVar):
        raise UnfoldError(f"free type variable {expr.name}")
    return expr


def children(node: TypeExpr) -> list[tuple[str, str, TypeExpr | None]]:
    """(direction, symbol, subtree) for each child of a head-normal node."""
    if isinstance(node, End):
        return [("", END_SYMBOL, None)]
    if isinstance(node, Msg):
        return [("d", data_symbol(node.polarity), node.payload), ("c", cont_symbol(node.polarity), node.cont)]
    if isinstance(node, Choice):
        return [(l, choice_symbol(node.view, node.labels, l), b) for l, b in node.branches]
    raise TypeError(f"not a head-normal node: {node!r}")


# ---------------------------------------------------------------- context-free unfolding
#
# A context-free state is a tuple of expressions composed with ';'.  The empty
# tuple stands for a lone ``skip`` and behaves like ``end``.


def _cf_head(sys: EquationSystem, seq: tuple[TypeExpr, ...]) -> TypeExpr:
    budget = 1000 + 16 * (len(sys.equations) + 1) * (sum(expr_size(e) for e in seq) + 1)
    seen: set[tuple] = set()
    steps = 0
    while seq:
        first, rest = seq[0], seq[1:]
        if isinstance(first, Skip):
            seq = rest
        elif isinstance(first, Seq):
            seq = (first.left, first.right) + rest
        elif isinstance(first, Call):
            if seq in seen or steps > budget:
                raise NonContractiveLoop(f"{first.ctor} is not contractive")
            seen.add(seq)
            steps += 1
            eqs = sys.equations_of(first.ctor)
            if not eqs:
                raise MissingEquation(f"no equation for {first.ctor}")
            seq = (eqs[0].body,) + rest
        elif isinstance(first, MsgCF):
            return Msg(first.polarity, _CFState((first.payload,)), _CFState(rest))
        elif isinstance(first, Choice):
            return Choice(first.view, tuple((l, _CFState((b,) + rest)) for l, b in first.branches))
        else:
            raise UnfoldError(f"{type(first).__name__} is not context-free syntax")
    return END


class _CFState(TypeExpr):
    """Opaque subtree: a pending ';'-sequence of context-free expressions."""

    __slots__ = ("seq",)

    def __init__(self, seq: tuple[TypeExpr, ...]):
        self.seq = seq


def _head(sys: EquationSystem, expr: TypeExpr) -> TypeExpr:
    if isinstance(expr, _CFState):
        return _cf_head(sys, expr.seq)
    if sys.cls is SystemClass.CONTEXT_FREE:
        return _cf_head(sys, (expr,))
    return head_normalize(sys, expr)


# ---------------------------------------------------------------- traces and trees


def _walk(sys: EquationSystem, expr: TypeExpr, max_len: int) -> Iterator[Word]:
    stack: list[tuple[Word, TypeExpr]] = [((), expr)]
    while stack:
        word, e = stack.pop()
        yield word
        if len(word) >= max_len:
            continue
        for _, sym, child in children(_head(sys, e)):
            if child is None:
                yield word + (sym,)
            else:
                stack.append((word + (sym,), child))


def unfold_traces(sys: EquationSystem, expr: TypeExpr | None = None, max_len: int = 8) -> set[Word]:
    """All traces of length at most ``max_len`` (prefix-closed)."""
    return set(_walk(sys, sys.root if expr is None else expr, max_len))


def unfold_traces_cf(sys: EquationSystem, expr: TypeExpr | None = None, max_len: int = 8) -> set[Word]:
    if sys.cls is not SystemClass.CONTEXT_FREE:
        raise ValueError("unfold_traces_cf expects a context-free system")
    return unfold_traces(sys, expr, max_len)


def tree_view(sys: EquationSystem, expr: TypeExpr | None = None, depth: int = 4) -> dict[tuple[str, ...], str]:
    """Node labels of the unfolded tree for every path shorter than ``depth``."""
    out: dict[tuple[str, ...], str] = {}
    stack = [((), sys.root if expr is None else expr)]
    while stack:
        path, e = stack.pop()
        if len(path) >= depth:
            continue
        node = _head(sys, e)
        out[path] = node_label(node)
        for direction, _, child in children(node):
            if child is not None:
                stack.append((path + (direction,), child))
    return out


def format_tree(tree: dict[tuple[str, ...], str]) -> str:
    lines: list[str] = []

    def emit(path: tuple[str, ...], indent: int) -> None:
        edge = f"{path[-1]}: " if path else ""
        lines.append("  " * indent + edge + tree[path])
        kids = sorted(p for p in tree if len(p) == len(path) + 1 and p[:-1] == path)
        for kid in kids:
            emit(kid, indent + 1)
    if () in tree:
        emit((), 0)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- word-set utilities


def check_prefix_closed(words: Iterable[Word]) -> tuple[bool, Word | None]:
    """Return (closed, a word whose proper prefix is missing)."""
    pool = set(words)
    for w in sorted(pool):
        if w and w[:-1] not in pool:
            return False, w
    return True, None


def dual_word(word: Word) -> Word:
    """Flip every symbol up to and including the first data symbol."""
    out = []
    flipping = True
    for sym in word:
        out.append(flip_symbol(sym) if flipping else sym)
        if is_data(sym):
            flipping = False
    return tuple(out)


def dual_image(words: Iterable[Word]) -> set[Word]:
    return {dual_word(w) for w in words}
