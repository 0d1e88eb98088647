"""Reference evaluator for the qualitative semantics.

Until variants use one-step boundaries: for ``f U{r}[a,b] g`` at time ``t``
the middle block is ``t+a..t+b``, the before-step is ``t+a-1`` and the
after-step ``t+b+1``; ``m``/``s``/``f`` anchor at ``t`` with boundaries
``t-1`` and ``t+1``.  A boundary step outside ``[0, H]`` makes the until
false.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .algebra import ca_classify
from .errors import HorizonExceeded, MissingBox, UnknownNode
from .model import Interpretation, Signal, SpatialModel, atom_holds
from .syntax import (
    EXISTS, FORALL, Always, And, Atom, Child, Const, Eventually, Iff, Implies, Neighbor,
    Not, Or, Parent, SAnd, SNot, SOr, Term, TheorySet, Until,
)

# (middle, before, after) conjunct polarities for (left, right)
UNTIL_TABLE = {
    "b": ((False, False), (True, False), (False, True)),
    "o": ((True, True), (True, False), (False, True)),
    "d": ((True, True), (False, True), (False, True)),
    "e": ((True, True), (False, False), (False, False)),
    "m": (None, (True, False), (False, True)),
    "s": (None, (False, False), (True, True)),
    "f": (None, (True, True), (False, False)),
}


def until_steps(u: Until, t: int):
    """``(middle steps, before step, after step)`` for an until at time ``t``."""
    if u.interval is None:
        return range(0), t - 1, t + 1
    lo, hi = t + u.interval.lo, t + u.interval.hi
    return range(lo, hi + 1), lo - 1, hi + 1


def always_steps(interval, t: int, horizon: int) -> range:
    hi = horizon if interval.hi is None else t + interval.hi
    return range(t + interval.lo, hi + 1)


@dataclass(frozen=True)
class EvalContext:
    model: SpatialModel
    signal: Signal
    interp: Interpretation
    node: object
    time: int = 0

    def __post_init__(self):
        if self.node not in self.model.nodes:
            raise UnknownNode(self.node)
        if not 0 <= self.time <= self.signal.horizon:
            raise HorizonExceeded(f"time {self.time} outside [0, {self.signal.horizon}]")


def pattern_admits(model: SpatialModel, pattern, v, u) -> bool:
    if pattern is None or pattern.is_wildcard:
        return True
    a, b = model.box(v), model.box(u)
    if a is None or b is None:
        raise MissingBox(f"neighbor pattern {pattern} needs boxes on {v!r} and {u!r}")
    return pattern.matches(ca_classify(a, b))


class _Evaluator:
    def __init__(self, ctx: EvalContext, strict: bool):
        self.m, self.sig, self.interp = ctx.model, ctx.signal, ctx.interp
        self.H = ctx.signal.horizon
        self.strict = strict
        self.memo: dict = {}

    def in_range(self, t: int) -> bool:
        return 0 <= t <= self.H

    def shifted(self, f, v, t: int) -> bool:
        if self.in_range(t):
            return self.formula(f, v, t)
        if self.strict:
            raise HorizonExceeded(f"time {t} outside [0, {self.H}]")
        return False

    def formula(self, f, v, t: int) -> bool:
        key = (id(f), v, t)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        r = self._formula(f, v, t)
        self.memo[key] = r
        return r

    def _formula(self, f, v, t):
        if isinstance(f, Const):
            return f.value
        if isinstance(f, Term):
            return self.term(f.term, v, t)
        if isinstance(f, Not):
            return not self.formula(f.arg, v, t)
        if isinstance(f, And):
            return self.formula(f.left, v, t) and self.formula(f.right, v, t)
        if isinstance(f, Or):
            return self.formula(f.left, v, t) or self.formula(f.right, v, t)
        if isinstance(f, Implies):
            return (not self.formula(f.left, v, t)) or self.formula(f.right, v, t)
        if isinstance(f, Iff):
            return self.formula(f.left, v, t) == self.formula(f.right, v, t)
        if isinstance(f, Always):
            return all(self.shifted(f.body, v, s) for s in always_steps(f.interval, t, self.H))
        if isinstance(f, Eventually):
            return any(self.shifted(f.body, v, s) for s in always_steps(f.interval, t, self.H))
        if isinstance(f, Until):
            return self.until(f, v, t)
        if isinstance(f, (Atom, SNot, SAnd, SOr, Parent, Child, Neighbor)):
            return self.term(f, v, t)
        raise TypeError(f"not a formula: {f!r}")

    def until(self, u: Until, v, t):
        middle, before, after = until_steps(u, t)
        mid_pol, b_pol, a_pol = UNTIL_TABLE[u.rel]
        if not (self.in_range(before) and self.in_range(after)):
            return False

        def block(s, pol):
            return (self.shifted(u.left, v, s) == pol[0]) and (self.shifted(u.right, v, s) == pol[1])

        if not (block(before, b_pol) and block(after, a_pol)):
            return False
        return all(block(s, mid_pol) for s in middle)

    def term(self, x, v, t) -> bool:
        if isinstance(x, Const):
            return x.value
        if isinstance(x, Atom):
            return atom_holds(self.interp, self.sig, x.name, v, t)
        if isinstance(x, SNot):
            return not self.term(x.arg, v, t)
        if isinstance(x, SAnd):
            return self.term(x.left, v, t) and self.term(x.right, v, t)
        if isinstance(x, SOr):
            return self.term(x.left, v, t) or self.term(x.right, v, t)
        if isinstance(x, (Parent, Child, Neighbor)):
            kind = {Parent: "P", Child: "C", Neighbor: "N"}[type(x)]
            rel = self.m.relatives(kind, v)
            pattern = x.pattern if kind == "N" else None
            if isinstance(x.scope, str):
                members = sorted(rel)
            else:
                for u in x.scope:
                    if u not in self.m.nodes:
                        raise UnknownNode(u)
                members = sorted(rel & set(x.scope))
            # singleton operator: vacuous unless the relation pattern admits u
            single = [(not pattern_admits(self.m, pattern, v, u)) or self.term(x.body, u, t)
                      for u in members]
            if x.scope == FORALL:
                return any(single)
            return all(single)
        raise TypeError(f"not a spatial term: {x!r}")


def evaluate(ctx: EvalContext, f, strict: bool = True) -> bool:
    """Decide ``x(v, t) |= f`` at ``ctx.node`` and ``ctx.time``.

    With ``strict`` a shifted reference past the signal raises
    :class:`HorizonExceeded`; otherwise it reads as false, which is the
    convention the compiler uses.
    """
    return _Evaluator(ctx, strict).formula(f, ctx.node, ctx.time)


def satisfies_all(ctx: EvalContext, sigma: TheorySet, strict: bool = True) -> bool:
    """Every formula of ``sigma`` holds at the context node at time 0."""
    ctx0 = replace(ctx, time=0)
    ev = _Evaluator(ctx0, strict)
    return all(ev.formula(f, ctx0.node, 0) for _, f in sigma)


def evaluate_all(ctx: EvalContext, sigma: TheorySet, strict: bool = True) -> dict:
    ev = _Evaluator(ctx, strict)
    return {name: ev.formula(f, ctx.node, ctx.time) for name, f in sigma}


__all__ = ["EvalContext", "evaluate", "satisfies_all", "evaluate_all", "UNTIL_TABLE",
           "until_steps", "always_steps", "pattern_admits", "EXISTS"]
