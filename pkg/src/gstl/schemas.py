"""Axiom schemas as templates, with instantiation, matching and one-step rewriting.

Schematic variables: ``phi``/``psi``/``xi``/``phi1``.. range over formulas
(or spatial terms inside ``P``/``C``/``N``), ``I`` over time intervals, ``A``
over scopes, ``R`` over neighbor patterns and ``rel`` over until relations.
``P3`` additionally takes the disjunct index ``i`` (1 or 2).

A schema instance is a single formula: ``lhs -> rhs`` for one-way schemas,
``lhs <-> rhs`` for two-way ones, premises joined by ``&``; the chained
``T3`` becomes ``(L -> M) & (M -> R)``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, is_dataclass

from .algebra import TimeInterval
from .errors import MissingVariable
from .syntax import (
    And, Always, Atom, CaPattern, Child, Eventually, Iff, Implies, Neighbor, Not, Or, Parent,
    POINT_UNTILS, SAnd, SNot, SOr, Term, Until, lift, lower, parse_interval, parse_pattern,
    parse_scope, SPATIAL_OPS,
)


@dataclass(frozen=True)
class Meta:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class MetaInterval:
    name: str = "I"

    def __str__(self):
        return f"[{self.name}]"


@dataclass(frozen=True)
class MetaScope:
    name: str = "A"


@dataclass(frozen=True)
class MetaPattern:
    name: str = "R"

    def __str__(self):
        return f"<{self.name}>"


@dataclass(frozen=True)
class MetaRel:
    name: str = "rel"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Schema:
    id: str
    kind: str        # "axiom", "=>" or "<=>"
    links: tuple     # ((lhs, rhs), ...); a chain has several links
    spatial: bool = False

    @property
    def variables(self) -> frozenset:
        out = set()
        for link in self.links:
            for t in link:
                if t is not None:
                    out |= _metas(t)
        if "phi_i" in out:
            out = (out - {"phi_i"}) | {"i"}
        return frozenset(out)


def _metas(t) -> set:
    if isinstance(t, (Meta, MetaInterval, MetaScope, MetaPattern, MetaRel)):
        return {t.name}
    if is_dataclass(t) and not isinstance(t, type):
        out = set()
        for fl in fields(t):
            out |= _metas(getattr(t, fl.name))
        return out
    return set()


f1, f2, f3 = Meta("phi1"), Meta("phi2"), Meta("phi3")
_phi, _psi, _xi = Meta("phi"), Meta("psi"), Meta("xi")
_I, _A, _R, _rel = MetaInterval(), MetaScope(), MetaPattern(), MetaRel()


def _spatial(op, body):
    if op is Neighbor:
        return Neighbor(_A, _R, body)
    return op(_A, body)


def _build() -> dict:
    s = {}

    def add(sid, kind, *links, spatial=False):
        s[sid] = Schema(sid, kind, tuple(links), spatial)

    add("P1", "=>", (Not(Not(_phi)), _phi))
    add("P2", "<=>", (And(f1, f2), And(f1, f2)))
    add("P3", "=>", (Meta("phi_i"), Or(f1, f2)))
    add("P4", "axiom", (Implies(f1, Implies(f2, f1)), None))
    add("P5", "axiom", (Implies(Implies(_phi, Implies(_psi, _xi)),
                                Implies(Implies(_phi, _psi), Implies(_phi, _xi))), None))
    add("P6", "axiom", (Implies(Implies(Not(_phi), Not(_psi)), Implies(_psi, _phi)), None))
    add("P7", "=>", (And(And(Or(f1, f2), Implies(f1, f3)), Implies(f2, f3)), f3))
    add("P8", "<=>", (And(Implies(f1, f2), Implies(f2, f1)), Iff(f1, f2)))
    add("P9", "<=>", (Not(And(f1, f2)), Or(Not(f1), Not(f2))))
    add("P10", "<=>", (Not(Or(f1, f2)), And(Not(f1), Not(f2))))
    add("T1", "=>", (Always(_I, Implies(f1, f2)), Implies(Always(_I, f1), Always(_I, f2))))
    add("T2", "<=>", (Always(_I, And(f1, f2)), And(Always(_I, f1), Always(_I, f2))))
    add("T3", "=>",
        (Eventually(_I, And(f1, f2)), And(Eventually(_I, f1), Eventually(_I, f2))),
        (And(Eventually(_I, f1), Eventually(_I, f2)), Eventually(_I, Or(f1, f2))))
    add("T4", "<=>", (Until(_rel, _I, And(f1, f2), f3),
                      And(Until(_rel, _I, f1, f3), Until(_rel, _I, f2, f3))))
    add("T5", "<=>", (Until(_rel, _I, f1, And(f2, f3)),
                      And(Until(_rel, _I, f1, f2), Until(_rel, _I, f1, f3))))
    for k, op in enumerate((Parent, Child, Neighbor)):
        add(f"S{2 * k + 1}", "<=>",
            (_spatial(op, SAnd(f1, f2)), SAnd(_spatial(op, f1), _spatial(op, f2))), spatial=True)
        add(f"S{2 * k + 2}", "<=>",
            (_spatial(op, SOr(f1, f2)), SOr(_spatial(op, f1), _spatial(op, f2))), spatial=True)
    return s


SCHEMAS = _build()
SCHEMA_IDS = tuple(SCHEMAS)


def get_schema(sid: str) -> Schema:
    try:
        return SCHEMAS[sid.upper()]
    except KeyError:
        raise KeyError(f"unknown schema {sid!r}") from None


def _p3_index(sub) -> str:
    i = int(sub.get("i", 1))
    if i not in (1, 2):
        raise ValueError("P3 index i must be 1 or 2")
    return f"phi{i}"


# --- substitution --------------------------------------------------------------

def _coerce(kind, value):
    if isinstance(value, (MetaInterval, MetaScope, MetaPattern, MetaRel)):
        return value
    if kind is MetaInterval:
        if value is None or isinstance(value, TimeInterval):
            return value
        if isinstance(value, str):
            return parse_interval(value)
        lo, hi = value
        return TimeInterval(int(lo), None if hi is None else int(hi))
    if kind is MetaScope:
        if isinstance(value, str) and value.startswith("["):
            return parse_scope(value)
        if isinstance(value, str):
            return value
        return tuple(sorted(set(value)))
    if kind is MetaPattern:
        return parse_pattern(value) if isinstance(value, str) else value
    if kind is MetaRel:
        return str(value)
    return value


def substitute(t, sub: dict, spatial: bool = False, alias: dict | None = None):
    """Replace schematic variables in template ``t``."""
    if isinstance(t, Meta):
        name = (alias or {}).get(t.name, t.name)
        if name not in sub:
            raise MissingVariable(name)
        v = sub[name]
        return lower(v) if spatial else (v if _is_formula(v) else lift(v))
    if isinstance(t, (MetaInterval, MetaScope, MetaPattern, MetaRel)):
        if t.name not in sub:
            raise MissingVariable(t.name)
        return _coerce(type(t), sub[t.name])
    if isinstance(t, Until):
        rel = substitute(t.rel, sub, spatial, alias)
        if rel in POINT_UNTILS:
            iv = None
        else:
            iv = substitute(t.interval, sub, spatial, alias)
        return Until(rel, iv, substitute(t.left, sub, False, alias),
                     substitute(t.right, sub, False, alias))
    if is_dataclass(t) and not isinstance(t, type) and not isinstance(t, (TimeInterval, CaPattern)):
        inner = spatial or isinstance(t, (Term, SNot, SAnd, SOr) + SPATIAL_OPS)
        return type(t)(*(substitute(getattr(t, fl.name), sub, inner, alias) for fl in fields(t)))
    return t


def _is_formula(v) -> bool:
    return not isinstance(v, (Atom, SNot, SAnd, SOr) + SPATIAL_OPS)


def _link_instance(schema: Schema, lhs, rhs, sub, alias):
    if schema.spatial:
        return lift(substitute(lhs, sub, True, alias)), lift(substitute(rhs, sub, True, alias))
    return substitute(lhs, sub, False, alias), substitute(rhs, sub, False, alias)


def instantiate_schema(sid: str, sub: dict):
    """The schema instance as one formula (see module docstring)."""
    schema = get_schema(sid)
    sub = dict(sub)
    alias = {"phi_i": _p3_index(sub)} if schema.id == "P3" else None
    if schema.kind == "axiom":
        return substitute(schema.links[0][0], sub, False, alias)
    parts = [_link_instance(schema, lhs, rhs, sub, alias) for lhs, rhs in schema.links]
    if schema.kind == "<=>":
        (lhs, rhs), = parts
        return Iff(lhs, rhs)
    imps = [Implies(lhs, rhs) for lhs, rhs in parts]
    out = imps[0]
    for imp in imps[1:]:
        out = And(out, imp)
    return out


# --- matching and rewriting ------------------------------------------------------

def match(t, f, binding: dict) -> bool:
    """Structural match of template ``t`` against ``f``, extending ``binding``."""
    if isinstance(t, (Meta, MetaInterval, MetaScope, MetaPattern, MetaRel)):
        if t.name in binding:
            return binding[t.name] == f
        binding[t.name] = f
        return True
    if type(t) is not type(f):
        return False
    if is_dataclass(t) and not isinstance(t, (TimeInterval, CaPattern)):
        return all(match(getattr(t, fl.name), getattr(f, fl.name), binding) for fl in fields(t))
    return t == f


def apply_schema(sid: str, f, extra: dict | None = None, reverse: bool = False):
    """Rewrite ``f`` at the root by the first link whose left side matches.

    Returns the rewritten formula or ``None`` when nothing matches.
    ``extra`` supplies variables occurring only on the right (e.g. the other
    disjunct of ``P3``).  ``reverse`` uses a two-way schema right to left.
    """
    schema = get_schema(sid)
    if schema.kind == "axiom" or (reverse and schema.kind != "<=>"):
        return None
    extra = dict(extra or {})
    alias = {"phi_i": _p3_index(extra)} if schema.id == "P3" else None
    links = [(r, l) for l, r in schema.links] if reverse else schema.links
    spatial_input = isinstance(f, (SNot, SAnd, SOr) + SPATIAL_OPS)
    for lhs, rhs in links:
        if alias:
            lhs = substitute_names(lhs, alias)
            rhs = substitute_names(rhs, alias)
        if schema.spatial:
            try:
                g = f if spatial_input else lower(f)
            except Exception:
                return None
        else:
            g = f
        b: dict = {}
        if not match(lhs, g, b):
            continue
        for k, v in extra.items():
            b.setdefault(k, v)
        out = substitute(rhs, b, schema.spatial)
        return out if (spatial_input or not schema.spatial) else lift(out)
    return None


def substitute_names(t, alias: dict):
    if isinstance(t, Meta):
        return Meta(alias.get(t.name, t.name))
    if is_dataclass(t) and not isinstance(t, (type, TimeInterval, CaPattern, Meta)):
        return type(t)(*(substitute_names(getattr(t, fl.name), alias) for fl in fields(t)))
    return t


def match_instance(sid: str, f):
    """Find a substitution making ``instantiate_schema(sid, .) == f``, or ``None``."""
    schema = get_schema(sid)
    for i in ((1, 2) if schema.id == "P3" else (None,)):
        sub = {} if i is None else {"i": i}
        try:
            template = instantiate_schema(sid, _meta_sub(schema, i))
        except Exception:
            continue
        b: dict = {}
        if match(template, f, b):
            sub.update(b)
            try:
                if instantiate_schema(sid, sub) == f:
                    return sub
            except Exception:
                continue
    return None


def _meta_sub(schema: Schema, i):
    out = {}
    for name in schema.variables:
        if name == "i":
            continue
        out[name] = {"I": MetaInterval(), "A": MetaScope(), "R": MetaPattern(),
                     "rel": MetaRel()}.get(name, Meta(name))
    if i:
        out["i"] = i
    return out
