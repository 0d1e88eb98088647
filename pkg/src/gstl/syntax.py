"""GSTL abstract syntax, concrete grammar, parser and printer.

Grammar (EBNF)::

    formula  = iff ;
    iff      = implies { "<->" implies } ;
    implies  = or [ "->" implies ] ;
    or       = and { "|" and } ;
    and      = until { "&" until } ;
    until    = unary { "U{" rel "}" [ interval ] unary } ;
    unary    = "!" unary
             | "G" interval unary | "F" interval unary
             | "P" scope unary | "C" scope unary | "N" scope pattern unary
             | "true" | "false" | IDENT | "(" formula ")" ;
    interval = "[" INT "," ( INT | "inf" ) "]" ;
    scope    = "[" ( "exists" | "forall" | IDENT { "," IDENT } ) "]" ;
    pattern  = "<" prel "," prel "," prel ">" ;
    prel     = "*" | rel [ "^-1" ] ;
    rel      = "b" | "o" | "d" | "e" | "m" | "s" | "f" ;

``G``, ``F``, ``P``, ``C``, ``N`` are operators only when immediately
followed by ``[`` and ``U`` only when followed by ``{``; otherwise they are
ordinary atoms.  ``U{o^-1}`` is accepted and stored with swapped operands.
Temporal operators may not occur under ``P``/``C``/``N``.

Note on quantified scopes: ``P[exists]`` expands to the *conjunction* over
all parents and ``P[forall]`` to the *disjunction*, exactly as the logic
defines them, which is the reverse of the usual reading of the words.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Union

from .algebra import BASES, CaRelation, IaRelation, TimeInterval
from .errors import AritySyntaxError, GstlSyntaxError, StratificationError, UnknownNode

EXISTS = "exists"
FORALL = "forall"
UNTIL_RELATIONS = ("b", "o", "d", "e", "m", "s", "f")
POINT_UNTILS = ("m", "s", "f")


# --- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class CaPattern:
    """Per-axis IA relation or ``None`` for the wildcard ``*``."""

    x: IaRelation | None = None
    y: IaRelation | None = None
    z: IaRelation | None = None

    @property
    def is_wildcard(self) -> bool:
        return self.x is None and self.y is None and self.z is None

    def matches(self, ca: CaRelation) -> bool:
        return all(p is None or p == r for p, r in zip((self.x, self.y, self.z), ca))

    def __str__(self):
        return "<" + ",".join("*" if r is None else str(r) for r in (self.x, self.y, self.z)) + ">"


WILDCARD = CaPattern()


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class SNot:
    arg: "SpatialTerm"


@dataclass(frozen=True)
class SAnd:
    left: "SpatialTerm"
    right: "SpatialTerm"


@dataclass(frozen=True)
class SOr:
    left: "SpatialTerm"
    right: "SpatialTerm"


@dataclass(frozen=True)
class Parent:
    scope: object  # EXISTS, FORALL or a sorted tuple of node ids
    body: "SpatialTerm"


@dataclass(frozen=True)
class Child:
    scope: object
    body: "SpatialTerm"


@dataclass(frozen=True)
class Neighbor:
    scope: object
    pattern: CaPattern
    body: "SpatialTerm"


SpatialTerm = Union[Atom, Const, SNot, SAnd, SOr, Parent, Child, Neighbor]
SPATIAL_OPS = (Parent, Child, Neighbor)


@dataclass(frozen=True)
class Term:
    term: SpatialTerm


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Always:
    interval: TimeInterval
    body: "Formula"


@dataclass(frozen=True)
class Eventually:
    interval: TimeInterval
    body: "Formula"


@dataclass(frozen=True)
class Until:
    rel: str
    interval: TimeInterval | None
    left: "Formula"
    right: "Formula"

    def __post_init__(self):
        if isinstance(self.rel, str) and self.rel in UNTIL_RELATIONS:
            if (self.rel in POINT_UNTILS) != (self.interval is None):
                raise AritySyntaxError(
                    f"until-{self.rel} " + ("takes no interval" if self.rel in POINT_UNTILS
                                            else "requires an interval"))


Formula = Union[Const, Term, Not, And, Or, Implies, Iff, Always, Eventually, Until]
TEMPORAL = (Always, Eventually, Until)


@dataclass(frozen=True)
class TheorySet:
    """Ordered named formulas."""

    items: tuple = ()

    def __post_init__(self):
        names = [n for n, _ in self.items]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ValueError(f"duplicate formula names: {sorted(dup)}")

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    @property
    def formulas(self) -> list:
        return [f for _, f in self.items]

    def names(self) -> list:
        return [n for n, _ in self.items]

    def __getitem__(self, name):
        for n, f in self.items:
            if n == name:
                return f
        raise KeyError(name)


def conj(parts, spatial=False):
    parts = list(parts)
    if not parts:
        return TRUE
    return reduce(SAnd if spatial else And, parts)


def disj(parts, spatial=False):
    parts = list(parts)
    if not parts:
        return FALSE
    return reduce(SOr if spatial else Or, parts)


def subterms(node) -> Iterator:
    """Pre-order walk over both formula and spatial-term nodes."""
    yield node
    for child in _children(node):
        yield from subterms(child)


def _children(node):
    if isinstance(node, (Not, SNot)):
        return (node.arg,)
    if isinstance(node, (And, Or, Implies, Iff, SAnd, SOr, Until)):
        return (node.left, node.right)
    if isinstance(node, (Always, Eventually, Parent, Child, Neighbor)):
        return (node.body,)
    if isinstance(node, Term):
        return (node.term,)
    return ()


def is_stratified(f) -> bool:
    """No temporal operator below a spatial term."""
    for node in subterms(f):
        if isinstance(node, Term) or isinstance(node, SPATIAL_OPS):
            if any(isinstance(s, TEMPORAL) for s in subterms(node)):
                return False
    return True


def atoms_of(node) -> set:
    return {n.name for n in subterms(node) if isinstance(n, Atom)}


def lift(t):
    """Embed a spatial term at formula level in canonical (parser) form."""
    if isinstance(t, SNot):
        return Not(lift(t.arg))
    if isinstance(t, SAnd):
        return And(lift(t.left), lift(t.right))
    if isinstance(t, SOr):
        return Or(lift(t.left), lift(t.right))
    if isinstance(t, Const):
        return t
    return Term(t)


def lower(f) -> SpatialTerm:
    """Inverse of :func:`lift`; raises :class:`StratificationError` on temporal
    operators.  Implications are desugared."""
    if isinstance(f, Term):
        return f.term
    if isinstance(f, Not):
        return SNot(lower(f.arg))
    if isinstance(f, And):
        return SAnd(lower(f.left), lower(f.right))
    if isinstance(f, Or):
        return SOr(lower(f.left), lower(f.right))
    if isinstance(f, Implies):
        return SOr(SNot(lower(f.left)), lower(f.right))
    if isinstance(f, Iff):
        a, b = lower(f.left), lower(f.right)
        return SAnd(SOr(SNot(a), b), SOr(SNot(b), a))
    if isinstance(f, TEMPORAL):
        raise StratificationError("temporal operator where a spatial term is required")
    return f


# --- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<op><->|->|\^-1|[()\[\]{}<>,&|!*])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise GstlSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            for i, ch in enumerate(m.group(), pos):
                if ch == "\n":
                    line, line_start = line + 1, i + 1
        else:
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# --- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None, cls=GstlSyntaxError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.col)

    def expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        self.i += 1

    def accept(self, text) -> bool:
        if self.tok.text == text:
            self.i += 1
            return True
        return False

    def parse(self):
        f = self.iff(False)
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return f

    def iff(self, sp):
        left = self.implies(sp)
        while self.tok.text == "<->":
            self.i += 1
            right = self.implies(sp)
            left = SAnd(SOr(SNot(left), right), SOr(SNot(right), left)) if sp else Iff(left, right)
        return left

    def implies(self, sp):
        left = self.or_(sp)
        if self.tok.text == "->":
            self.i += 1
            right = self.implies(sp)
            return SOr(SNot(left), right) if sp else Implies(left, right)
        return left

    def or_(self, sp):
        left = self.and_(sp)
        while self.accept("|"):
            left = (SOr if sp else Or)(left, self.and_(sp))
        return left

    def and_(self, sp):
        left = self.until(sp)
        while self.accept("&"):
            left = (SAnd if sp else And)(left, self.until(sp))
        return left

    def until(self, sp):
        left = self.unary(sp)
        while self.tok.text == "U" and self.peek().text == "{":
            tok = self.tok
            if sp:
                raise self.error("until operator inside a spatial term", tok, StratificationError)
            self.i += 2
            rel_tok = self.tok
            rel = self.relation(allow_wild=False)
            self.expect("}")
            interval = self.interval() if self.tok.text == "[" else None
            right = self.unary(sp)
            if rel.base not in UNTIL_RELATIONS:
                raise self.error(f"unknown until relation {rel}", rel_tok)
            if (rel.base in POINT_UNTILS) != (interval is None):
                need = "takes no interval" if rel.base in POINT_UNTILS else "requires an interval"
                raise self.error(f"until-{rel.base} {need}", rel_tok, AritySyntaxError)
            if interval is not None and interval.hi is None:
                raise self.error("until intervals must be bounded", rel_tok)
            left = Until(rel.base, interval, right, left) if rel.inverted \
                else Until(rel.base, interval, left, right)
        return left

    def unary(self, sp):
        tok = self.tok
        if self.accept("!"):
            return (SNot if sp else Not)(self.unary(sp))
        if self.accept("("):
            f = self.iff(sp)
            self.expect(")")
            return f
        if tok.kind == "ident" and self.peek().text == "[" and tok.text in ("G", "F", "P", "C", "N"):
            self.i += 1
            if tok.text in ("G", "F"):
                if sp:
                    raise self.error("temporal operator inside a spatial term", tok,
                                     StratificationError)
                interval = self.interval()
                body = self.unary(False)
                return (Always if tok.text == "G" else Eventually)(interval, body)
            scope = self.scope()
            pattern = self.pattern() if tok.text == "N" else None
            body = self.unary(True)
            op = {"P": lambda: Parent(scope, body), "C": lambda: Child(scope, body),
                  "N": lambda: Neighbor(scope, pattern, body)}[tok.text]()
            return op if sp else Term(op)
        if tok.kind == "ident":
            self.i += 1
            if tok.text in ("true", "false"):
                return Const(tok.text == "true")
            return Atom(tok.text) if sp else Term(Atom(tok.text))
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    def integer(self):
        if self.tok.kind != "int":
            raise self.error("expected an integer")
        v = int(self.tok.text)
        self.i += 1
        return v

    def interval(self) -> TimeInterval:
        start = self.tok
        self.expect("[")
        lo = self.integer()
        self.expect(",")
        if self.tok.text == "inf":
            self.i += 1
            hi = None
        else:
            hi = self.integer()
        self.expect("]")
        if hi is not None and lo > hi:
            raise self.error(f"empty interval [{lo},{hi}]", start)
        return TimeInterval(lo, hi)

    def scope(self):
        self.expect("[")
        if self.tok.text in (EXISTS, FORALL):
            q = self.tok.text
            self.i += 1
            self.expect("]")
            return q
        ids = []
        while True:
            if self.tok.kind not in ("ident", "int"):
                raise self.error("expected a node id, 'exists' or 'forall'")
            ids.append(self.tok.text)
            self.i += 1
            if not self.accept(","):
                break
        self.expect("]")
        return tuple(sorted(set(ids)))

    def relation(self, allow_wild=True):
        tok = self.tok
        if allow_wild and self.accept("*"):
            return None
        if tok.kind != "ident":
            raise self.error("expected an IA relation")
        self.i += 1
        try:
            r = IaRelation.parse(tok.text)
        except ValueError:
            raise self.error(f"unknown IA relation {tok.text!r}", tok) from None
        if self.accept("^-1"):
            r = IaRelation(r.base, not r.inverted) if r.base != "e" else r
        return r

    def pattern(self) -> CaPattern:
        self.expect("<")
        rels = [self.relation()]
        for _ in range(2):
            self.expect(",")
            rels.append(self.relation())
        self.expect(">")
        return CaPattern(*rels)


def _parse_piece(text: str, method: str):
    p = _Parser(text)
    v = getattr(p, method)()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return v


def parse_interval(text: str) -> TimeInterval:
    return _parse_piece(text, "interval")


def parse_scope(text: str):
    return _parse_piece(text, "scope")


def parse_pattern(text: str) -> CaPattern:
    return _parse_piece(text, "pattern")


def parse(text: str):
    """Parse one formula.  Boolean structure outside spatial operators is kept
    at formula level; atoms and spatial operators are wrapped in :class:`Term`."""
    return _Parser(text).parse()


def parse_term(text: str) -> SpatialTerm:
    """Parse a spatial term (no temporal operators allowed anywhere)."""
    p = _Parser(text)
    t = p.iff(True)
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return t


# --- printer -----------------------------------------------------------------

def _scope_str(scope) -> str:
    return f"[{scope}]" if isinstance(scope, str) else "[" + ",".join(scope) + "]"


def to_text(node) -> str:
    """Canonical concrete syntax; ``parse(to_text(f)) == f``."""
    if isinstance(node, Const):
        return "true" if node.value else "false"
    if isinstance(node, Atom):
        return node.name
    if isinstance(node, Term):
        return to_text(node.term)
    if isinstance(node, (Not, SNot)):
        return "!" + to_text(node.arg)
    if isinstance(node, (And, SAnd)):
        return f"({to_text(node.left)} & {to_text(node.right)})"
    if isinstance(node, (Or, SOr)):
        return f"({to_text(node.left)} | {to_text(node.right)})"
    if isinstance(node, Implies):
        return f"({to_text(node.left)} -> {to_text(node.right)})"
    if isinstance(node, Iff):
        return f"({to_text(node.left)} <-> {to_text(node.right)})"
    if isinstance(node, Always):
        return f"G{node.interval} {to_text(node.body)}"
    if isinstance(node, Eventually):
        return f"F{node.interval} {to_text(node.body)}"
    if isinstance(node, Until):
        iv = "" if node.interval is None else str(node.interval)
        return f"({to_text(node.left)} U{{{node.rel}}}{iv} {to_text(node.right)})"
    if isinstance(node, Parent):
        return f"P{_scope_str(node.scope)} {to_text(node.body)}"
    if isinstance(node, Child):
        return f"C{_scope_str(node.scope)} {to_text(node.body)}"
    if isinstance(node, Neighbor):
        return f"N{_scope_str(node.scope)}{node.pattern} {to_text(node.body)}"
    # ground leaves from the compiler and schema metavariables print themselves
    return str(node)


print_formula = to_text

_UNI = {"G": "□", "F": "◇", "&": "∧", "|": "∨", "!": "¬", "->": "→", "<->": "↔"}


def to_unicode(node) -> str:
    """Symbolic rendering for documentation only; not parseable."""
    s = to_text(node)
    for k in ("<->", "->"):
        s = s.replace(f" {k} ", f" {_UNI[k]} ")
    s = s.replace(" & ", " ∧ ").replace(" | ", " ∨ ").replace("!", "¬")
    s = re.sub(r"\bG\[", "□[", s)
    s = re.sub(r"\bF\[", "◇[", s)
    s = s.replace("[exists]", "∃").replace("[forall]", "∀").replace("^-1", "⁻¹")
    return s


# --- quantifier expansion ----------------------------------------------------

def _scoped_nodes(model, kind, scope, v):
    rel = model.relatives(kind, v)
    if isinstance(scope, str):
        return sorted(rel)
    for u in scope:
        if u not in model.nodes:
            raise UnknownNode(u)
    return sorted(set(scope) & rel)


def expand_quantified(t: SpatialTerm, model, v) -> SpatialTerm:
    """Rewrite every scope into singleton scopes over the relatives of the
    node each operator is evaluated at.

    ``exists`` becomes a conjunction and ``forall`` a disjunction over the
    relatives; an explicit node list keeps only the members that really are
    relatives and becomes a conjunction (the operator is universal over it).
    """
    if v not in model.nodes:
        raise UnknownNode(v)
    if isinstance(t, (Atom, Const)):
        return t
    if isinstance(t, SNot):
        return SNot(expand_quantified(t.arg, model, v))
    if isinstance(t, (SAnd, SOr)):
        return type(t)(expand_quantified(t.left, model, v), expand_quantified(t.right, model, v))
    kind = {Parent: "P", Child: "C", Neighbor: "N"}[type(t)]
    parts = []
    for u in _scoped_nodes(model, kind, t.scope, v):
        body = expand_quantified(t.body, model, u)
        parts.append(Neighbor((u,), t.pattern, body) if kind == "N" else type(t)((u,), body))
    if t.scope == FORALL:
        return disj(parts, spatial=True)
    return conj(parts, spatial=True)


def has_quantifier(t) -> bool:
    return any(isinstance(n, SPATIAL_OPS) and isinstance(n.scope, str) for n in subterms(t))


# --- theory files ------------------------------------------------------------

_NAME = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)$")


def load_theory(text: str) -> TheorySet:
    """Parse a formula file: ``name: <formula>`` stanzas, continuation lines
    indented, ``#`` comments."""
    stanzas: list[list] = []
    for n, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        m = _NAME.match(body)
        if m and not raw[:1].isspace():
            stanzas.append([m.group(1), n, m.group(2)])
        elif stanzas and raw[:1].isspace():
            stanzas[-1][2] += "\n" + body
        else:
            raise GstlSyntaxError("expected 'name: formula'", n, 1)
    items = []
    for name, line, src in stanzas:
        try:
            items.append((name, parse(src)))
        except GstlSyntaxError as exc:
            raise type(exc)(f"{name}: {exc.message}", exc.line + line - 1, exc.column) from None
    try:
        return TheorySet(tuple(items))
    except ValueError as exc:
        raise GstlSyntaxError(str(exc), 1, 1) from None


def dump_theory(sigma: TheorySet) -> str:
    return "".join(f"{name}: {to_text(f)}\n" for name, f in sigma)
