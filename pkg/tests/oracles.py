"""Independent oracles and random generators shared by the test modules.

Nothing here calls the compiler or the solver: brute-force routes go through
the reference evaluator or plain enumeration only.
"""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from gstl.algebra import ALL_IA, Box3, TimeInterval
from gstl.model import Interpretation, Signal, SpatialModel, single_node_model
from gstl.proof import Axiom, Irr, ModusPonens, Premise, ProofScript, Step
from gstl.schemas import SCHEMAS, instantiate_schema
from gstl.semantics import EvalContext, evaluate
from gstl.syntax import (
    EXISTS, FALSE, FORALL, TRUE, Always, And, Atom, CaPattern, Child, Eventually, Iff, Implies,
    Neighbor, Not, Or, Parent, SAnd, SNot, SOr, Term, TheorySet, Until, lift,
)

BOUNDED_RELS = ("b", "o", "d", "e")
POINT_RELS = ("m", "s", "f")


# --- formulas -------------------------------------------------------------------------

def rand_interval(rng: random.Random, max_lo=2, max_len=2, unbounded=False) -> TimeInterval:
    lo = rng.randint(0, max_lo)
    if unbounded and rng.random() < 0.2:
        return TimeInterval(lo, None)
    return TimeInterval(lo, lo + rng.randint(0, max_len))


def rand_pattern(rng: random.Random) -> CaPattern:
    axes = [None if rng.random() < 0.5 else rng.choice(ALL_IA) for _ in range(3)]
    return CaPattern(*axes)


def rand_scope(rng: random.Random, nodes=("a1", "b2", "c3")):
    r = rng.random()
    if r < 0.35:
        return EXISTS
    if r < 0.6:
        return FORALL
    return tuple(sorted(rng.sample(list(nodes), rng.randint(1, min(3, len(nodes))))))


def rand_spatial(rng: random.Random, atoms, depth: int, ops=True, nodes=("a1", "b2", "c3")):
    """Spatial term in parser-canonical form (no implication, no temporal)."""
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.05:
            return rng.choice((TRUE, FALSE))
        return Atom(rng.choice(atoms))
    k = rng.randrange(6 if ops else 3)
    if k == 0:
        return SNot(rand_spatial(rng, atoms, depth - 1, ops, nodes))
    if k in (1, 2):
        cls = SAnd if k == 1 else SOr
        return cls(rand_spatial(rng, atoms, depth - 1, ops, nodes),
                   rand_spatial(rng, atoms, depth - 1, ops, nodes))
    body = rand_spatial(rng, atoms, depth - 1, ops, nodes)
    scope = rand_scope(rng, nodes)
    if k == 3:
        return Parent(scope, body)
    if k == 4:
        return Child(scope, body)
    return Neighbor(scope, rand_pattern(rng), body)


def rand_formula(rng: random.Random, atoms, depth: int, *, spatial_ops=True, temporal=True,
                 implies=True, unbounded=False, max_lo=2, max_len=2,
                 nodes=("a1", "b2", "c3")):
    """Stratified formula in parser-canonical form."""
    if depth <= 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.05:
            return rng.choice((TRUE, FALSE))
        if spatial_ops and r < 0.35:
            t = rand_spatial(rng, atoms, 2, True, nodes)
            while not isinstance(t, (Parent, Child, Neighbor)):
                t = rand_spatial(rng, atoms, 2, True, nodes)
            return Term(t)
        return Term(Atom(rng.choice(atoms)))
    kinds = ["not", "and", "or"]
    if implies:
        kinds += ["implies", "iff"]
    if temporal:
        kinds += ["G", "F", "U", "U"]
    k = rng.choice(kinds)

    def sub():
        return rand_formula(rng, atoms, depth - 1, spatial_ops=spatial_ops, temporal=temporal,
                            implies=implies, unbounded=unbounded, max_lo=max_lo,
                            max_len=max_len, nodes=nodes)

    if k == "not":
        return Not(sub())
    if k in ("and", "or", "implies", "iff"):
        return {"and": And, "or": Or, "implies": Implies, "iff": Iff}[k](sub(), sub())
    if k in ("G", "F"):
        iv = rand_interval(rng, max_lo, max_len, unbounded)
        return (Always if k == "G" else Eventually)(iv, sub())
    rel = rng.choice(BOUNDED_RELS + POINT_RELS)
    iv = None if rel in POINT_RELS else rand_interval(rng, max_lo, max_len)
    if iv is not None and iv.lo == 0:
        iv = TimeInterval(1, iv.hi + 1)
    return Until(rel, iv, sub(), sub())


# --- brute-force satisfiability over signals --------------------------------------------

def all_signals(atoms, horizon: int, node: str = "v"):
    slots = [(a, t) for a in atoms for t in range(horizon + 1)]
    for bits in itertools.product((False, True), repeat=len(slots)):
        vals = {(node, t): {} for t in range(horizon + 1)}
        for (a, t), b in zip(slots, bits):
            vals[(node, t)][a] = b
        yield Signal(horizon, vals)


def brute_force_sat(f, atoms, horizon: int, node: str = "v") -> bool:
    """Some boolean signal on a single node satisfies ``f`` at t=0 (edges read false)."""
    model = single_node_model(node)
    interp = Interpretation.booleans(atoms)
    for sig in all_signals(atoms, horizon, node):
        if evaluate(EvalContext(model, sig, interp, node, 0), f, strict=False):
            return True
    return False


# --- random spatial models and signals ----------------------------------------------------

def rand_box(rng: random.Random) -> Box3:
    axes = []
    for _ in range(3):
        lo = rng.randint(0, 3)
        axes.append((Fraction(lo), Fraction(lo + rng.randint(1, 2))))
    return Box3(*axes)


def rand_model(rng: random.Random) -> SpatialModel:
    """Three layers, every node boxed, neighbors derived from distance."""
    n_top = rng.randint(1, 2)
    top = [(f"r{i}", "room", rand_box(rng)) for i in range(n_top)]
    mid = [(f"m{i}", "zone", rand_box(rng)) for i in range(rng.randint(2, 4))]
    low = [(f"l{i}", "item", rand_box(rng)) for i in range(rng.randint(2, 4))]
    parents = [(rng.choice(top)[0], m[0]) for m in mid] + [(rng.choice(mid)[0], n[0]) for n in low]
    for _ in range(rng.randint(0, 2)):
        parents.append((rng.choice(mid)[0], rng.choice(low)[0]))
    return SpatialModel.create([top, mid, low], sorted(set(parents)), (), Fraction(1))


def rand_signal(rng: random.Random, model: SpatialModel, atoms, horizon: int, p: float = 0.5):
    vals = {(v, t): {a: rng.random() < p for a in atoms}
            for v in model.nodes for t in range(horizon + 1)}
    return Signal(horizon, vals)


def node_ids(model: SpatialModel):
    return sorted(model.nodes)


# --- schema substitutions --------------------------------------------------------------------

def rand_substitution(rng: random.Random, sid: str, atoms, nodes) -> dict:
    schema = SCHEMAS[sid]
    sub = {}
    for name in sorted(schema.variables):
        if name == "I":
            sub[name] = rand_interval(rng, 2, 3)
        elif name == "A":
            sub[name] = rand_scope(rng, nodes)
        elif name == "R":
            sub[name] = rand_pattern(rng)
        elif name == "rel":
            sub[name] = rng.choice(BOUNDED_RELS + POINT_RELS)
        elif name == "i":
            sub[name] = rng.choice((1, 2))
        elif schema.spatial:
            sub[name] = lift(rand_spatial(rng, atoms, 2, True, nodes))
        else:
            sub[name] = rand_formula(rng, atoms, 2, spatial_ops=True, nodes=nodes)
    return sub


# --- SAT --------------------------------------------------------------------------------------------

def rand_kcnf(rng: random.Random, n: int, m: int, k: int = 3) -> list:
    return [[v if rng.random() < 0.5 else -v for v in rng.sample(range(1, n + 1), k)]
            for _ in range(m)]


def brute_models(n: int, clauses) -> set:
    """Every satisfying assignment as a tuple of n booleans."""
    out = set()
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            out.add(bits)
    return out


def satisfies(assign: dict, clauses) -> bool:
    return all(any(assign[abs(l)] == (l > 0) for l in c) for c in clauses)


# --- proofs ---------------------------------------------------------------------------------------

_PROOF_SCHEMAS = tuple(SCHEMAS)


def rand_proof(rng: random.Random, length: int = 8, atoms=("a", "b", "c")):
    """A valid proof and the premises it uses."""
    steps, premises = [], []

    def add(f, j):
        steps.append(Step(f, j))
        if isinstance(j, Premise) and f not in premises:
            premises.append(f)

    fresh = itertools.count()
    while len(steps) < length:
        move = rng.choice(("premise", "axiom", "axiom", "mp", "irr"))
        if move == "premise" or not steps and move in ("mp",):
            add(rand_formula(rng, list(atoms), 2, spatial_ops=False), Premise())
        elif move == "axiom":
            sid = rng.choice(_PROOF_SCHEMAS)
            sub = rand_substitution(rng, sid, list(atoms), ("x", "y"))
            f = instantiate_schema(sid, sub)
            spelled = tuple(sorted(sub.items())) if rng.random() < 0.5 else None
            add(f, Axiom(sid, spelled))
        elif move == "mp":
            i = rng.randrange(len(steps))
            target = rand_formula(rng, list(atoms), 1, spatial_ops=False)
            add(Implies(steps[i].formula, target), Premise())
            add(target, ModusPonens(i + 1, len(steps)))
        else:
            mu = Term(Atom(f"mu{next(fresh)}"))
            phi = rand_formula(rng, list(atoms), 2, spatial_ops=False)
            add(Implies(Or(mu, Eventually(rand_interval(rng), mu)), phi), Premise())
            add(phi, Irr(len(steps)))
    return ProofScript(tuple(steps)), TheorySet(tuple((f"h{k}", f) for k, f in enumerate(premises)))


def mutate_proof(rng: random.Random, p: ProofScript):
    """One-step mutation; returns the mutated script and the step it breaks."""
    k = rng.randrange(len(p.steps))
    st = p.steps[k]
    steps = list(p.steps)
    j = st.justification
    if isinstance(j, (ModusPonens, Irr)) and rng.random() < 0.5:
        forward = rng.randint(k + 1, len(p.steps) + 2)
        if isinstance(j, ModusPonens):
            nj = ModusPonens(j.i, forward) if rng.random() < 0.5 else ModusPonens(forward, j.j)
        else:
            nj = Irr(forward)
        steps[k] = Step(st.formula, nj)
    else:
        steps[k] = Step(Term(Atom("zz_fresh")), j)
    return ProofScript(tuple(steps)), k + 1


def schema_trial(rng: random.Random, sid: str, atoms=("a", "b", "c"), horizon: int = 8):
    """Instantiate ``sid`` randomly and evaluate it on a random model at every node.

    Returns ``(instance, holds)``; times 0..2 are checked with out-of-range reads false.
    """
    model = rand_model(rng)
    nodes = node_ids(model)
    inst = instantiate_schema(sid, rand_substitution(rng, sid, list(atoms), nodes))
    sig = rand_signal(rng, model, list(atoms), horizon)
    interp = Interpretation.booleans(atoms)
    holds = all(evaluate(EvalContext(model, sig, interp, v, t), inst, strict=False)
                for v in nodes for t in range(3))
    return inst, holds


def _columns(n: int) -> list:
    """Truth-table column of each variable as a 2**n-bit integer (bit i = value in assignment i)."""
    size = 1 << n
    cols = []
    for k in range(n):
        if k < 3:
            byte = (0xAA, 0xCC, 0xF0)[k]
            raw = bytes([byte]) * max(1, size // 8)
        else:
            half = 1 << (k - 3)
            raw = (b"\x00" * half + b"\xff" * half) * (size // (2 * half * 8))
        cols.append(int.from_bytes(raw, "little") & ((1 << size) - 1))
    return cols


def truth_table_count(n: int, clauses) -> int:
    """Exact model count by evaluating every clause over all 2**n assignments at once."""
    cols = _columns(n)
    full = (1 << (1 << n)) - 1
    acc = full
    for c in clauses:
        cl = 0
        for l in c:
            cl |= cols[l - 1] if l > 0 else full ^ cols[-l - 1]
        acc &= cl
        if not acc:
            return 0
    return bin(acc).count("1")
