"""Termination analysis for deterministic stack rewriting.

Both trivial equations (``X(sigma S) = Y(w S)``) and epsilon moves of an
automaton are deterministic rewrites of a pair (node, stack) that only look
at the top of the stack.  :class:`TrivialRewrites` decides, for every pair
(node, top), whether the rewrite sequence started there reaches a
non-rewriting node, runs forever, or pops the starting symbol.  Results are
memoized across seeds, so the whole table costs O(|nodes| * |symbols|) rule
applications times the longest pushed word.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Optional

MISSING = "missing"


@dataclass(frozen=True)
class Rewrite:
    """Rewrite to ``target`` with stack ``push + rest`` (or just ``push`` when
    ``keep_rest`` is false).  ``push`` lists symbols top first and replaces
    the observed top symbol."""

    target: Hashable
    push: tuple = ()
    keep_rest: bool = True


@dataclass(frozen=True)
class Outcome:
    kind: str  # "ok", "loop" or "drop"
    target: Hashable = None
    missing: bool = False


OK = Outcome("ok")
LOOP = Outcome("loop")

Rule = Callable[[Hashable, Optional[str]], "Rewrite | str | None"]


class TrivialRewrites:
    """``rule(node, top)`` returns a :class:`Rewrite`, ``None`` when the node
    is productive at that top, or :data:`MISSING` when undefined."""

    def __init__(self, rule: Rule):
        self.rule = rule
        self.memo: dict[tuple, Outcome] = {}
        self.active: set[tuple] = set()
        self.steps = 0

    def outcome(self, node, top) -> Outcome:
        """Run from ``(node, top . rest)``; ``top=None`` means an empty stack."""
        path: list[tuple] = []
        cur, t = node, top
        res: Outcome | None = None
        while res is None:
            combo = (cur, t)
            self.steps += 1
            if combo in self.memo:
                res = self.memo[combo]
                break
            if combo in self.active:
                res = LOOP
                break
            self.active.add(combo)
            path.append(combo)
            r = self.rule(cur, t)
            if r is None:
                res = OK
            elif r == MISSING:
                res = Outcome("loop", missing=True)
            elif t is None or not r.keep_rest:
                nxt, res = self._push(r.target, r.push)
                if res is None and t is not None:
                    res = self.outcome(nxt, None)
                cur, t = nxt, None
            elif not r.push:
                res = Outcome("drop", r.target)
            else:
                nxt, res = self._push(r.target, r.push[:-1])
                cur, t = nxt, r.push[-1]
        for combo in path:
            self.active.discard(combo)
            self.memo[combo] = res
        return res

    def _push(self, node, word: tuple):
        """Run the symbols of ``word`` (top first) down to the level below."""
        for sym in word:
            sub = self.outcome(node, sym)
            if sub.kind != "drop":
                return node, sub
            node = sub.target
        return node, None

    def bad(self, nodes, tops) -> dict[tuple, Outcome]:
        """Seeds among ``nodes x tops`` whose rewrite sequence never ends."""
        out = {}
        for n in nodes:
            for t in tops:
                res = self.outcome(n, t)
                if res.kind == "loop":
                    out[(n, t)] = res
        return out
