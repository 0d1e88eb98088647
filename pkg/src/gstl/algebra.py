"""Allen interval algebra, its 3D lift (cubic algebra) and box geometry.

Endpoints are exact rationals so the boundary relations (m, s, f, e) are
decided by equality rather than a tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import DegenerateInterval

BASES = ("b", "m", "o", "s", "f", "d", "e")

_ALIASES = {"bi": "b^-1", "mi": "m^-1", "oi": "o^-1", "si": "s^-1",
            "fi": "f^-1", "di": "d^-1", "eq": "e", "=": "e", "≡": "e"}


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class TimeInterval:
    """Closed interval of integer time steps; ``hi is None`` means unbounded."""

    lo: int
    hi: int | None

    def __post_init__(self):
        if self.lo < 0 or (self.hi is not None and (self.hi < 0 or self.lo > self.hi)):
            raise ValueError(f"invalid time interval [{self.lo},{self.hi}]")

    @property
    def bounded(self) -> bool:
        return self.hi is not None

    def __str__(self):
        return f"[{self.lo},{'inf' if self.hi is None else self.hi}]"


@dataclass(frozen=True, order=True)
class IaRelation:
    base: str
    inverted: bool = False

    def __post_init__(self):
        if self.base not in BASES:
            raise ValueError(f"unknown IA relation {self.base!r}")
        if self.base == "e" and self.inverted:
            object.__setattr__(self, "inverted", False)

    @classmethod
    def parse(cls, text: str) -> "IaRelation":
        text = _ALIASES.get(text.strip(), text.strip())
        for suffix in ("^-1", "⁻¹", "'"):
            if text.endswith(suffix):
                return cls(text[: -len(suffix)], True)
        return cls(text)

    def __str__(self):
        return self.base + ("^-1" if self.inverted else "")


ALL_IA = tuple(IaRelation(b, inv) for b in BASES for inv in (False, True)
               if not (b == "e" and inv))


def ia_inverse(r: IaRelation) -> IaRelation:
    return r if r.base == "e" else IaRelation(r.base, not r.inverted)


def _check(lo, hi):
    if not lo < hi:
        raise DegenerateInterval(f"degenerate interval [{lo},{hi}]")


def ia_classify(a, b) -> IaRelation:
    """Basic Allen relation holding from interval ``a`` to interval ``b``."""
    (a0, a1), (b0, b1) = a, b
    _check(a0, a1)
    _check(b0, b1)
    if a0 == b0 and a1 == b1:
        return IaRelation("e")
    if a1 < b0:
        return IaRelation("b")
    if a1 == b0:
        return IaRelation("m")
    if a0 < b0 < a1 < b1:
        return IaRelation("o")
    if a0 == b0 and a1 < b1:
        return IaRelation("s")
    if a1 == b1 and a0 > b0:
        return IaRelation("f")
    if b0 < a0 and a1 < b1:
        return IaRelation("d")
    return ia_inverse(ia_classify(b, a))


@dataclass(frozen=True)
class Box3:
    """Axis-aligned box; each axis is a ``(lo, hi)`` pair of rationals."""

    x: tuple
    y: tuple
    z: tuple

    def __post_init__(self):
        for name in ("x", "y", "z"):
            lo, hi = (_as_fraction(v) for v in getattr(self, name))
            _check(lo, hi)
            object.__setattr__(self, name, (lo, hi))

    @classmethod
    def from_bounds(cls, lo_x, hi_x, lo_y, hi_y, lo_z, hi_z) -> "Box3":
        return cls((lo_x, hi_x), (lo_y, hi_y), (lo_z, hi_z))

    def bounds(self) -> tuple:
        return (*self.x, *self.y, *self.z)

    def axes(self):
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class CaRelation:
    x: IaRelation
    y: IaRelation
    z: IaRelation

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def __str__(self):
        return f"({self.x},{self.y},{self.z})"


def ca_classify(a: Box3, b: Box3) -> CaRelation:
    return CaRelation(*(ia_classify(pa, pb) for pa, pb in zip(a.axes(), b.axes())))


# Lattice coordinates: (position of a.lo, position of a.hi) relative to b's
# endpoints, each in 0..4 = before / at lo / inside / at hi / after.
LATTICE = {
    IaRelation("b"): (0, 0),
    IaRelation("m"): (0, 1),
    IaRelation("o"): (0, 2),
    IaRelation("f", True): (0, 3),
    IaRelation("d", True): (0, 4),
    IaRelation("s"): (1, 2),
    IaRelation("e"): (1, 3),
    IaRelation("s", True): (1, 4),
    IaRelation("d"): (2, 2),
    IaRelation("f"): (2, 3),
    IaRelation("o", True): (2, 4),
    IaRelation("m", True): (3, 4),
    IaRelation("b", True): (4, 4),
}


def ia_is_convex(rs: Iterable[IaRelation]) -> bool:
    """True iff ``rs`` is an interval of the IA lattice."""
    rs = set(rs)
    if not rs:
        raise ValueError("convexity is undefined for the empty relation")
    xs = [LATTICE[r][0] for r in rs]
    ys = [LATTICE[r][1] for r in rs]
    box = {r for r, (x, y) in LATTICE.items()
           if min(xs) <= x <= max(xs) and min(ys) <= y <= max(ys)}
    return box == rs


def box_min_distance_sq(a: Box3, b: Box3) -> Fraction:
    total = Fraction(0)
    for (a0, a1), (b0, b1) in zip(a.axes(), b.axes()):
        gap = max(b0 - a1, a0 - b1, Fraction(0))
        total += gap * gap
    return total


def _exact_sqrt(q: Fraction):
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return math.sqrt(q)


def box_min_distance(a: Box3, b: Box3):
    """Euclidean distance between closest points; exact when it is rational."""
    return _exact_sqrt(box_min_distance_sq(a, b))
