"""Compile a theory set over a spatial model and horizon to CNF.

Pipeline: :func:`eliminate_temporal` unrolls temporal operators into
time-indexed leaves (:class:`At`), :func:`ground_spatial` turns those into
propositional variables (:class:`Var` over :class:`GroundAtom`) and
:func:`to_cnf` produces clauses.  :func:`compile_theory` runs all three and
numbers variables deterministically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .errors import ResourceLimit, StratificationError, UnknownNode
from .schemas import apply_schema
from .semantics import UNTIL_TABLE, always_steps, pattern_admits, until_steps
from .syntax import (
    FALSE, TRUE, Always, And, Atom, Child, Const, Eventually, Iff, Implies, Neighbor, Not,
    Or, Parent, SAnd, SNot, SOr, Term, TheorySet, Until, expand_quantified, is_stratified,
    to_text,
)

GROUNDINGS = ("expand", "abstract")
CNF_MODES = ("distribution", "equisatisfiable")
PATTERN_MODES = ("keep", "resolve")
DEFAULT_MAX_CLAUSES = 500_000


@dataclass(frozen=True, eq=True)
class GroundAtom:
    """Propositional variable: spatial term ``term`` holds at ``node`` at ``time``."""

    term: object
    node: str
    time: int

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.term, self.node, self.time)))

    def __hash__(self):
        return self._hash

    def __str__(self):
        return f"{_leaf_text(self.term)}@{self.node}@{self.time}"


@dataclass(frozen=True)
class At:
    """Spatial term at a fixed time step (output of temporal elimination)."""

    term: object
    time: int

    def __str__(self):
        return f"{_leaf_text(self.term)}@{self.time}"


@dataclass(frozen=True)
class Var:
    atom: GroundAtom

    def __str__(self):
        return str(self.atom)


def _leaf_text(term) -> str:
    s = to_text(term)
    return s if isinstance(term, Atom) else "{" + s + "}"


def _bal(parts, op, empty):
    """Balanced n-ary fold; keeps recursion depth logarithmic."""
    parts = list(parts)
    if not parts:
        return empty
    while len(parts) > 1:
        nxt = [op(parts[i], parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def big_and(parts):
    return _bal(parts, And, TRUE)


def big_or(parts):
    return _bal(parts, Or, FALSE)


# --- temporal elimination --------------------------------------------------------

def eliminate_temporal(f, t: int, horizon: int, notes: list | None = None):
    """Unroll ``f`` evaluated at step ``t`` into a temporal-free formula.

    A subformula referenced at a step outside ``[0, horizon]`` becomes
    ``false``; unbounded intervals stop at the horizon (recorded in ``notes``).
    """
    memo: dict = {}

    def go(g, s):
        if not 0 <= s <= horizon:
            return FALSE
        key = (id(g), s)
        hit = memo.get(key)
        if hit is None:
            hit = memo[key] = _elim(g, s)
        return hit

    def lit(g, s, pol):
        x = go(g, s)
        return x if pol else Not(x)

    def _elim(g, s):
        if isinstance(g, Const):
            return g
        if isinstance(g, Term):
            return At(g.term, s)
        if isinstance(g, (Atom, SNot, SAnd, SOr, Parent, Child, Neighbor)):
            return At(g, s)
        if isinstance(g, Not):
            return Not(go(g.arg, s))
        if isinstance(g, (And, Or, Implies, Iff)):
            return type(g)(go(g.left, s), go(g.right, s))
        if isinstance(g, (Always, Eventually)):
            if g.interval.hi is None and notes is not None:
                msg = f"unbounded interval {g.interval} truncated at horizon {horizon}"
                if msg not in notes:
                    notes.append(msg)
            steps = always_steps(g.interval, s, horizon)
            parts = [go(g.body, k) for k in steps]
            return big_and(parts) if isinstance(g, Always) else big_or(parts)
        if isinstance(g, Until):
            middle, before, after = until_steps(g, s)
            if not (0 <= before <= horizon and 0 <= after <= horizon):
                return FALSE
            mid, bpol, apol = UNTIL_TABLE[g.rel]
            parts = [And(lit(g.left, k, mid[0]), lit(g.right, k, mid[1])) for k in middle]
            parts += [lit(g.left, before, bpol[0]), lit(g.right, after, apol[1]),
                      lit(g.left, after, apol[0]), lit(g.right, before, bpol[1])]
            return big_and(parts)
        raise TypeError(f"not a formula: {g!r}")

    return go(f, t)


# --- spatial grounding -----------------------------------------------------------

def _wrap(chain, x):
    for kind, u, pat in reversed(chain):
        x = Neighbor((u,), pat, x) if kind == "N" else (Parent if kind == "P" else Child)((u,), x)
    return x


def _push(x, v, t, model, patterns, pend):
    """Resolve singleton-scoped operators to the node they point at.

    ``pend`` is ``(anchor, chain)`` once a neighbor pattern has to stay
    symbolic; below it only conjunction and disjunction are distributed
    (S5/S6) and the rest becomes one atom anchored at ``anchor``.
    """
    if isinstance(x, Const):
        return x
    if isinstance(x, (SAnd, SOr)):
        op = And if isinstance(x, SAnd) else Or
        return op(_push(x.left, v, t, model, patterns, pend), _push(x.right, v, t, model, patterns, pend))
    if pend is not None:
        anchor, chain = pend
        if isinstance(x, (Parent, Child, Neighbor)):
            (u,) = x.scope
            kind = {Parent: "P", Child: "C", Neighbor: "N"}[type(x)]
            pat = x.pattern if kind == "N" else None
            return _push(x.body, u, t, model, patterns, (anchor, chain + ((kind, u, pat),)))
        return Var(GroundAtom(_wrap(chain, x), anchor, t))
    if isinstance(x, Atom):
        return Var(GroundAtom(x, v, t))
    if isinstance(x, SNot):
        return Not(_push(x.arg, v, t, model, patterns, None))
    if isinstance(x, (Parent, Child)):
        (u,) = x.scope
        return _push(x.body, u, t, model, patterns, None)
    if isinstance(x, Neighbor):
        (u,) = x.scope
        if x.pattern.is_wildcard:
            return _push(x.body, u, t, model, patterns, None)
        if patterns == "resolve":
            if not pattern_admits(model, x.pattern, v, u):
                return TRUE
            return _push(x.body, u, t, model, patterns, None)
        return _push(x.body, u, t, model, patterns, (v, (("N", u, x.pattern),)))
    raise TypeError(f"not a spatial term: {x!r}")


def _abstract(x, root, t):
    if isinstance(x, Const):
        return x
    if isinstance(x, SNot):
        return Not(_abstract(x.arg, root, t))
    if isinstance(x, (SAnd, SOr)):
        op = And if isinstance(x, SAnd) else Or
        return op(_abstract(x.left, root, t), _abstract(x.right, root, t))
    return Var(GroundAtom(x, root, t))


def ground_spatial(f, model, root, mode: str = "expand", patterns: str = "keep"):
    """Replace every :class:`At` leaf by propositional structure over :class:`Var`.

    ``abstract``: each maximal operator-headed spatial term is one variable at
    ``root``.  ``expand``: scopes are expanded against the model, connectives
    are pushed through the operators and each operator chain is resolved to
    the node it reaches, so ``C[c] hand`` becomes the variable ``hand@c``.
    Neighbor patterns stay symbolic (``keep``) or are decided from the boxes
    (``resolve``).
    """
    if mode not in GROUNDINGS:
        raise ValueError(f"grounding mode must be one of {GROUNDINGS}")
    if patterns not in PATTERN_MODES:
        raise ValueError(f"pattern mode must be one of {PATTERN_MODES}")
    if root not in model.nodes:
        raise UnknownNode(root)
    cache: dict = {}

    def leaf(a: At):
        key = (a.term, a.time)
        hit = cache.get(key)
        if hit is None:
            if mode == "abstract":
                hit = _abstract(a.term, root, a.time)
            else:
                hit = _push(expand_quantified(a.term, model, root), root, a.time, model, patterns, None)
            cache[key] = hit
        return hit

    memo: dict = {}

    def go(g):
        hit = memo.get(id(g))
        if hit is not None:
            return hit[1]
        if isinstance(g, At):
            out = leaf(g)
        elif isinstance(g, Not):
            out = Not(go(g.arg))
        elif isinstance(g, (And, Or, Implies, Iff)):
            out = type(g)(go(g.left), go(g.right))
        elif isinstance(g, (Const, Var)):
            out = g
        else:
            raise TypeError(f"not a temporal-free formula: {g!r}")
        memo[id(g)] = (g, out)
        return out

    return go(f)


def eval_ground(f, assignment) -> bool:
    """Truth value of a ground formula under ``{GroundAtom: bool}``."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Var):
        return bool(assignment[f.atom])
    if isinstance(f, Not):
        return not eval_ground(f.arg, assignment)
    if isinstance(f, And):
        return eval_ground(f.left, assignment) and eval_ground(f.right, assignment)
    if isinstance(f, Or):
        return eval_ground(f.left, assignment) or eval_ground(f.right, assignment)
    if isinstance(f, Implies):
        return (not eval_ground(f.left, assignment)) or eval_ground(f.right, assignment)
    if isinstance(f, Iff):
        return eval_ground(f.left, assignment) == eval_ground(f.right, assignment)
    raise TypeError(f"not a ground formula: {f!r}")


def ground_atoms(f) -> set:
    out, stack = set(), [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Var):
            out.add(g.atom)
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, (And, Or, Implies, Iff)):
            stack += [g.left, g.right]
    return out


# --- clause generation -----------------------------------------------------------

def simplify(f):
    """Constant folding."""
    if isinstance(f, Not):
        a = simplify(f.arg)
        return Const(not a.value) if isinstance(a, Const) else Not(a)
    if isinstance(f, (And, Or)):
        a, b = simplify(f.left), simplify(f.right)
        unit, zero = (TRUE, FALSE) if isinstance(f, And) else (FALSE, TRUE)
        if a == zero or b == zero:
            return zero
        if a == unit:
            return b
        if b == unit:
            return a
        return type(f)(a, b)
    if isinstance(f, Implies):
        return simplify(Or(Not(f.left), f.right))
    if isinstance(f, Iff):
        a, b = simplify(f.left), simplify(f.right)
        if isinstance(a, Const):
            return b if a.value else simplify(Not(b))
        if isinstance(b, Const):
            return a if b.value else simplify(Not(a))
        return Iff(a, b)
    return f


def nnf(f):
    """Negation normal form using P1, P8, P9 and P10 as rewrite rules."""
    if isinstance(f, Implies):
        return nnf(Or(Not(f.left), f.right))
    if isinstance(f, Iff):
        return nnf(apply_schema("P8", f, reverse=True))
    if isinstance(f, (And, Or)):
        return type(f)(nnf(f.left), nnf(f.right))
    if isinstance(f, Not):
        g = f.arg
        if isinstance(g, Const):
            return Const(not g.value)
        if isinstance(g, Not):
            return nnf(apply_schema("P1", f))
        if isinstance(g, And):
            return nnf(apply_schema("P9", f))
        if isinstance(g, Or):
            return nnf(apply_schema("P10", f))
        if isinstance(g, (Implies, Iff)):
            return nnf(Not(nnf(g)))
        return f
    return f


def _distribute(f, cap: int) -> list:
    """CNF of an NNF formula as a list of frozensets of ``(atom, polarity)``."""
    if isinstance(f, Const):
        return [] if f.value else [frozenset()]
    if isinstance(f, Var):
        return [frozenset({(f.atom, True)})]
    if isinstance(f, Not):
        return [frozenset({(f.arg.atom, False)})]
    if isinstance(f, And):
        return _dedup(_distribute(f.left, cap) + _distribute(f.right, cap))
    if isinstance(f, Or):
        left, right = _distribute(f.left, cap), _distribute(f.right, cap)
        if len(left) * len(right) > cap:
            raise ResourceLimit(f"distribution would exceed {cap} clauses; "
                                "use the equisatisfiable CNF mode")
        out = []
        for a, b in product(left, right):
            c = a | b
            if not any((x, not p) in c for x, p in c):
                out.append(c)
        return _dedup(out)
    raise TypeError(f"not in negation normal form: {f!r}")


def _dedup(clauses):
    seen, out = set(), []
    for c in clauses:
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


@dataclass(frozen=True)
class AuxVar:
    """Definition variable introduced by the equisatisfiable encoding."""

    index: int
    time: int

    def __str__(self):
        return f"aux{self.index}"


class _Tseitin:
    def __init__(self):
        self.count = 0
        self.memo: dict = {}
        self.clauses: list = []

    def fresh(self, time):
        self.count += 1
        return AuxVar(self.count, time)

    def lit(self, f):
        """Literal ``(var, polarity)`` equivalent to ``f``."""
        if isinstance(f, Var):
            return (f.atom, True), f.atom.time
        if isinstance(f, Not):
            (v, p), t = self.lit(f.arg)
            return (v, not p), t
        hit = self.memo.get(id(f))
        if hit is not None:
            return hit[1]
        subs = [self.lit(g) for g in (f.left, f.right)]
        (a, b), t = [s[0] for s in subs], max(s[1] for s in subs)
        x = self.fresh(t)
        na, nb = (a[0], not a[1]), (b[0], not b[1])
        X, nX = (x, True), (x, False)
        if isinstance(f, And):
            cl = [{nX, a}, {nX, b}, {X, na, nb}]
        elif isinstance(f, Or):
            cl = [{nX, a, b}, {X, na}, {X, nb}]
        elif isinstance(f, Implies):
            cl = [{nX, na, b}, {X, a}, {X, nb}]
        elif isinstance(f, Iff):
            cl = [{nX, na, b}, {nX, a, nb}, {X, a, b}, {X, na, nb}]
        else:
            raise TypeError(f"unexpected node {f!r}")
        self.clauses += [frozenset(c) for c in cl]
        out = ((x, True), t)
        self.memo[id(f)] = (f, out)
        return out

    def encode(self, f) -> list:
        if isinstance(f, Const):
            return [] if f.value else [frozenset()]
        top = []
        stack = [f]
        while stack:
            g = stack.pop()
            if isinstance(g, And):
                stack += [g.right, g.left]
            else:
                top.append(g)
        out = []
        for g in top:
            lits = _flat_clause(g)
            if lits is not None:
                out.append(frozenset(lits))
            else:
                start = len(self.clauses)
                (v, p), _ = self.lit(g)
                out += self.clauses[start:]
                out.append(frozenset({(v, p)}))
        return out


def _flat_clause(g):
    """Literals of ``g`` when it already is a disjunction of literals."""
    lits, stack = [], [g]
    while stack:
        h = stack.pop()
        if isinstance(h, Or):
            stack += [h.right, h.left]
        elif isinstance(h, Var):
            lits.append((h.atom, True))
        elif isinstance(h, Not) and isinstance(h.arg, Var):
            lits.append((h.arg.atom, False))
        else:
            return None
    return lits


# --- CNF container -----------------------------------------------------------------

def _term_key(term) -> str:
    return to_text(term)


@dataclass(frozen=True)
class Cnf:
    """Numbered clause set.

    Variables ``1..len(atoms)`` are the ground atoms in (term, node, time)
    order; higher indices are definition variables.  Clauses are tuples of
    signed DIMACS integers; ``origins[k]`` names the formula clause ``k``
    came from.
    """

    atoms: tuple = ()
    aux: tuple = ()
    clauses: tuple = ()
    origins: tuple = ()
    diagnostics: tuple = ()
    horizon: int | None = None
    index: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def num_vars(self) -> int:
        return len(self.atoms) + len(self.aux)

    @property
    def variables(self) -> tuple:
        return self.atoms

    def var(self, atom) -> int:
        return self.index[atom]

    def label(self, v: int):
        v = abs(v)
        return self.atoms[v - 1] if v <= len(self.atoms) else self.aux[v - len(self.atoms) - 1]

    def var_time(self, v: int):
        lab = self.label(v)
        return getattr(lab, "time", None)

    def literal_clauses(self) -> list:
        return [[(self.label(l), l > 0) for l in c] for c in self.clauses]

    @property
    def trivially_unsat(self) -> bool:
        return any(len(c) == 0 for c in self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"c gstl cnf horizon={self.horizon}",
                 f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines += [" ".join(map(str, c)) + (" 0" if c else "0") for c in self.clauses]
        return "\n".join(lines) + "\n"

    def sidecar_map(self) -> str:
        """``var<TAB>term<TAB>node<TAB>time`` per atom, ``var<TAB>aux`` per definition."""
        out = []
        for i, a in enumerate(self.atoms, 1):
            label = to_text(a.term) if isinstance(a, GroundAtom) else str(a)
            node = a.node if isinstance(a, GroundAtom) else ""
            t = a.time if isinstance(a, GroundAtom) else ""
            out.append(f"{i}\t{label}\t{node}\t{t}")
        base = len(self.atoms)
        out += [f"{base + i}\taux" for i in range(1, len(self.aux) + 1)]
        return "\n".join(out) + ("\n" if out else "")

    def restrict(self, keep) -> "Cnf":
        """Same variables, only clauses whose index satisfies ``keep``."""
        idx = [k for k in range(len(self.clauses)) if keep(k)]
        return Cnf(self.atoms, self.aux, tuple(self.clauses[k] for k in idx),
                   tuple(self.origins[k] for k in idx), self.diagnostics, self.horizon, self.index)

    def clause_time(self, k: int) -> int:
        """Latest time step mentioned by clause ``k`` (-1 for none)."""
        ts = [self.var_time(l) for l in self.clauses[k]]
        ts = [t for t in ts if t is not None]
        return max(ts, default=-1)

    @classmethod
    def build(cls, literal_clauses, origins=(), extra_atoms=(), diagnostics=(), horizon=None):
        """Number variables deterministically and encode literal clauses."""
        atoms, aux = set(extra_atoms), set()
        for c in literal_clauses:
            for x, _ in c:
                (aux if isinstance(x, AuxVar) else atoms).add(x)
        gatoms = [a for a in atoms if isinstance(a, GroundAtom)]
        others = sorted((a for a in atoms if not isinstance(a, GroundAtom)), key=repr)
        term_ids = {k: i for i, k in enumerate(sorted({_term_key(a.term) for a in gatoms}))}
        ordered = sorted(gatoms, key=lambda a: (term_ids[_term_key(a.term)], str(a.node), a.time))
        ordered += others
        aux_sorted = sorted(aux, key=lambda x: x.index)
        index = {a: i for i, a in enumerate(ordered + aux_sorted, 1)}
        num = tuple(tuple(index[x] if p else -index[x] for x, p in _stable(c)) for c in literal_clauses)
        origins = tuple(origins) or ("",) * len(num)
        return cls(tuple(ordered), tuple(aux_sorted), num, origins, tuple(diagnostics), horizon, index)


def _stable(clause):
    return sorted(clause, key=lambda lp: (repr(lp[0]), lp[1]))


def to_cnf(f, mode: str = "distribution", max_clauses: int = DEFAULT_MAX_CLAUSES) -> Cnf:
    """CNF of a ground formula; see :func:`clauses_of`."""
    return Cnf.build(clauses_of(f, mode, max_clauses), extra_atoms=ground_atoms(f))


def clauses_of(f, mode: str = "distribution", max_clauses: int = DEFAULT_MAX_CLAUSES,
               tseitin: _Tseitin | None = None) -> list:
    """Clauses (frozensets of ``(atom, polarity)``) for a ground formula.

    ``distribution`` is logically equivalent over the original atoms;
    ``equisatisfiable`` adds definition variables whose values are fixed by
    the originals, so projected model counts agree.
    """
    if mode not in CNF_MODES:
        raise ValueError(f"CNF mode must be one of {CNF_MODES}")
    g = simplify(f)
    if mode == "distribution":
        return _distribute(nnf(g), max_clauses)
    return (tseitin or _Tseitin()).encode(g)


# --- whole theories -----------------------------------------------------------------

def default_root(model):
    """First node of the top layer."""
    if not model.roots:
        raise ValueError("model has no nodes")
    return model.roots[0]


def ground_theory(sigma: TheorySet, model, root=None, horizon: int = 0,
                  grounding: str = "expand", patterns: str = "keep", notes=None) -> list:
    """``[(name, ground formula)]`` for every formula of ``sigma`` at time 0."""
    root = default_root(model) if root is None else root
    out = []
    for name, f in sigma:
        if not is_stratified(f):
            raise StratificationError(f"{name}: temporal operator inside a spatial term")
        local: list = []
        e = eliminate_temporal(f, 0, horizon, local)
        if notes is not None:
            notes += [f"{name}: {n}" for n in local]
        out.append((name, ground_spatial(e, model, root, grounding, patterns)))
    return out


def compile_theory(sigma: TheorySet, model, root=None, horizon: int = 0,
                   grounding: str = "expand", cnf: str = "distribution",
                   patterns: str = "keep", max_clauses: int = DEFAULT_MAX_CLAUSES) -> Cnf:
    """Conjunction of the ground CNFs of ``sigma``.

    Every (term, node) pair that occurs gets a variable for each step of
    ``[0, horizon]``, so unconstrained steps count as free atoms.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    notes: list = []
    grounded = ground_theory(sigma, model, root, horizon, grounding, patterns, notes)
    tseitin = _Tseitin()
    all_clauses, origins, atoms = [], [], set()
    for name, g in grounded:
        cls = clauses_of(g, cnf, max_clauses, tseitin)
        all_clauses += cls
        origins += [name] * len(cls)
        atoms |= ground_atoms(g)
    pairs = {(a.term, a.node) for a in atoms}
    grid = {GroundAtom(term, node, t) for term, node in pairs for t in range(horizon + 1)}
    return Cnf.build(all_clauses, origins, grid, notes, horizon)


def witness_signal(witness: dict, horizon: int, nodes=()):
    """Boolean signal realizing an assignment whose atoms are plain predicates."""
    from .model import Interpretation, Signal
    truth, names = {}, set()
    for a, b in witness.items():
        if not isinstance(a, GroundAtom) or not isinstance(a.term, Atom):
            raise ValueError(f"atom {a} is not a plain predicate")
        truth[(a.term.name, a.node, a.time)] = b
        names.add(a.term.name)
    return Signal.from_atoms(horizon, truth, nodes), Interpretation.booleans(names)
