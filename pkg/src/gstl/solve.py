"""Satisfiability engine: CDCL search, projected model enumeration and counting.

Search is deterministic: decisions take the lowest unassigned variable and
try ``false`` first; conflicts learn the first-UIP clause and backjump.
Enumeration keeps one solver alive and adds a blocking clause over the
projection after every model.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

from .compile import Cnf, GroundAtom, compile_theory
from .errors import ResourceLimit
from .syntax import parse_term

log = logging.getLogger(__name__)


@dataclass
class Stats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    learned: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class SolveResult:
    satisfiable: bool
    witness: dict | None = None     # label -> bool over every variable
    model: tuple | None = None      # signed DIMACS literals
    stats: Stats = field(default_factory=Stats)

    def __bool__(self):
        return self.satisfiable


class Solver:
    """Single-threaded CDCL solver over DIMACS-style integer clauses."""

    def __init__(self, num_vars: int, clauses=(), max_conflicts: int | None = None,
                 max_decisions: int | None = None):
        self.n = num_vars
        self.value = [0] * (num_vars + 1)       # +1 true, -1 false, 0 unassigned
        self.level = [0] * (num_vars + 1)
        self.reason: list = [None] * (num_vars + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.unsat = False
        self.next_var = 1
        self.stats = Stats()
        self.max_conflicts = max_conflicts
        self.max_decisions = max_decisions
        self.original: list[tuple] = []
        for c in clauses:
            self.add_clause(c)

    # -- basic operations --
    def lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def enqueue(self, lit: int, reason) -> None:
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = self.decision_level
        self.reason[v] = reason
        self.trail.append(lit)

    def backtrack(self, lvl: int) -> None:
        if self.decision_level <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            v = abs(lit)
            self.value[v] = 0
            self.reason[v] = None
            if v < self.next_var:
                self.next_var = v
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = min(self.qhead, len(self.trail))

    def _watch(self, ci: int) -> None:
        c = self.clauses[ci]
        self.watches.setdefault(c[0], []).append(ci)
        self.watches.setdefault(c[1], []).append(ci)

    def add_clause(self, lits) -> None:
        """Add a permanent clause (backtracks to level 0)."""
        lits = list(dict.fromkeys(int(l) for l in lits))
        if any(abs(l) > self.n or l == 0 for l in lits):
            raise ValueError(f"literal out of range in clause {lits}")
        if any(-l in lits for l in lits):
            return
        self.original.append(tuple(lits))
        if self.unsat:
            return
        self.backtrack(0)
        if any(self.lit_value(l) > 0 for l in lits):
            return
        lits = [l for l in lits if self.lit_value(l) == 0]
        if not lits:
            self.unsat = True
        elif len(lits) == 1:
            self.enqueue(lits[0], None)
            if self.propagate() is not None:
                self.unsat = True
        else:
            self.clauses.append(lits)
            self._watch(len(self.clauses) - 1)

    def propagate(self):
        """Unit propagation; returns a conflicting clause index or ``None``."""
        value, clauses, watches, trail = self.value, self.clauses, self.watches, self.trail
        while self.qhead < len(trail):
            false_lit = -trail[self.qhead]
            self.qhead += 1
            self.stats.propagations += 1
            ws = watches.get(false_lit)
            if not ws:
                continue
            j = 0
            n = len(ws)
            i = 0
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                first = c[0]
                if first == false_lit:
                    first = c[1]
                    c[0], c[1] = first, false_lit
                fv = value[first] if first > 0 else -value[-first]
                if fv > 0:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if (value[lk] if lk > 0 else -value[-lk]) >= 0:
                        c[1], c[k] = lk, false_lit
                        watches.setdefault(lk, []).append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if fv < 0:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        return ci
                    self.enqueue(first, ci)
            del ws[j:]
        return None

    def analyze(self, confl: int):
        """First-UIP learned clause and the level to backjump to."""
        seen = set()
        learnt = [0]
        counter = 0
        p = None
        idx = len(self.trail) - 1
        lits = self.clauses[confl]
        cur = self.decision_level
        while True:
            for q in lits:
                if p is not None and q == p:
                    continue
                v = abs(q)
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    if self.level[v] == cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen.discard(abs(p))
            counter -= 1
            if counter == 0:
                break
            lits = self.clauses[self.reason[abs(p)]]
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: self.level[abs(learnt[k])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _pick(self):
        v = self.next_var
        while v <= self.n and self.value[v] != 0:
            v += 1
        self.next_var = v
        return v if v <= self.n else None

    def _learn(self, learnt: list[int]) -> None:
        if len(learnt) == 1:
            self.enqueue(learnt[0], None)
            return
        self.clauses.append(learnt)
        ci = len(self.clauses) - 1
        self._watch(ci)
        self.stats.learned += 1
        self.enqueue(learnt[0], ci)

    def search(self) -> bool:
        """Run to a full satisfying assignment (True) or refutation (False)."""
        if self.unsat:
            return False
        while True:
            confl = self.propagate()
            if confl is not None:
                self.stats.conflicts += 1
                if self.max_conflicts is not None and self.stats.conflicts > self.max_conflicts:
                    raise ResourceLimit(f"conflict limit {self.max_conflicts} reached")
                if self.decision_level == 0:
                    self.unsat = True
                    return False
                learnt, bt = self.analyze(confl)
                self.backtrack(bt)
                self._learn(learnt)
                continue
            v = self._pick()
            if v is None:
                return True
            self.stats.decisions += 1
            if self.max_decisions is not None and self.stats.decisions > self.max_decisions:
                raise ResourceLimit(f"decision limit {self.max_decisions} reached")
            self.trail_lim.append(len(self.trail))
            self.enqueue(-v, None)

    def block(self, lits: list[int]) -> None:
        """Add a clause that is false under the current full assignment and
        resume search from the deepest level where it is not yet falsified."""
        lits = [l for l in dict.fromkeys(lits) if self.level[abs(l)] > 0]
        if not lits:
            self.unsat = True
            return
        lits.sort(key=lambda l: -self.level[abs(l)])
        top = self.level[abs(lits[0])]
        if len(lits) == 1:
            self.backtrack(0)
            self.enqueue(lits[0], None)
            return
        second = self.level[abs(lits[1])]
        if top > second:
            self.backtrack(second)
            self.clauses.append(lits)
            ci = len(self.clauses) - 1
            self._watch(ci)
            self.enqueue(lits[0], ci)
        else:
            self.backtrack(top - 1)
            self.clauses.append(lits)
            self._watch(len(self.clauses) - 1)

    def model(self) -> tuple:
        return tuple(v if self.value[v] > 0 else -v for v in range(1, self.n + 1))

    def verify(self, model) -> bool:
        """Check ``model`` against the clauses given at construction or via
        :meth:`add_clause` (blocking clauses are not rechecked)."""
        truth = set(model)
        return all(any(l in truth for l in c) for c in self.original)


# --- public API ------------------------------------------------------------------

def _num_vars_clauses(c):
    if isinstance(c, Cnf):
        return c.num_vars, c.clauses
    n, clauses = c
    return n, clauses


def _labels(c, model):
    if isinstance(c, Cnf):
        return {c.label(l): l > 0 for l in model}
    return {abs(l): l > 0 for l in model}


def solve(c, max_conflicts: int | None = None, max_decisions: int | None = None) -> SolveResult:
    """Decide a :class:`Cnf` (or ``(num_vars, clauses)``)."""
    n, clauses = _num_vars_clauses(c)
    s = Solver(n, clauses, max_conflicts, max_decisions)
    if not s.search():
        return SolveResult(False, stats=s.stats)
    model = s.model()
    if not s.verify(model):
        raise AssertionError("solver produced an assignment violating a clause")
    return SolveResult(True, _labels(c, model), model, s.stats)


def _projection_vars(c, projection):
    if projection is None:
        if isinstance(c, Cnf):
            return list(range(1, len(c.atoms) + 1))
        return list(range(1, _num_vars_clauses(c)[0] + 1))
    if isinstance(c, Cnf):
        return sorted(c.var(a) for a in projection)
    return sorted(int(v) for v in projection)


def enumerate_models(c, projection=None, limit: int | None = None,
                     max_conflicts: int | None = None) -> Iterator[dict]:
    """Yield each model restricted to ``projection`` exactly once.

    ``projection`` defaults to the ground atoms (definition variables are
    left out).  Keys are atoms for a :class:`Cnf` and variable indices for a
    raw clause list.
    """
    n, clauses = _num_vars_clauses(c)
    proj = _projection_vars(c, projection)
    s = Solver(n, clauses, max_conflicts)
    keys = [c.label(v) for v in proj] if isinstance(c, Cnf) else proj
    found = 0
    while limit is None or found < limit:
        if not s.search():
            return
        model = s.model()
        if not s.verify(model):
            raise AssertionError("solver produced an assignment violating a clause")
        found += 1
        value = s.value
        yield {k: value[v] > 0 for k, v in zip(keys, proj)}
        s.block([-v if s.value[v] > 0 else v for v in proj])


def count_models(c, projection=None, method: str = "enumerate", max_models: int | None = None,
                 max_conflicts: int | None = None) -> int:
    """Exact number of models over ``projection``.

    ``enumerate`` counts blocking-clause enumeration (raises
    :class:`ResourceLimit` past ``max_models``); ``components`` is an
    independent DPLL counter with component caching, valid when every
    variable outside the projection is a definition variable.
    """
    if method == "enumerate":
        n, clauses = _num_vars_clauses(c)
        proj = _projection_vars(c, projection)
        s = Solver(n, clauses, max_conflicts)
        total = 0
        while s.search():
            if not s.verify(s.model()):
                raise AssertionError("solver produced an assignment violating a clause")
            total += 1
            if max_models is not None and total > max_models:
                raise ResourceLimit(f"more than {max_models} models")
            s.block([-v if s.value[v] > 0 else v for v in proj])
        return total
    if method == "components":
        n, clauses = _num_vars_clauses(c)
        proj = _projection_vars(c, projection)
        full = set(range(1, n + 1))
        hidden = full - set(proj)
        if isinstance(c, Cnf):
            aux = set(range(len(c.atoms) + 1, n + 1))
            if hidden - aux:
                raise ValueError("component counting needs every ground atom in the projection")
        elif hidden:
            raise ValueError("component counting needs the full variable set as projection")
        return component_count(n, clauses)
    raise ValueError(f"unknown counting method {method!r}")


def component_count(num_vars: int, clauses) -> int:
    """#SAT over variables ``1..num_vars`` by DPLL with component caching."""
    cls = set()
    for c in clauses:
        c = frozenset(c)
        if any(-l in c for l in c):
            continue
        cls.add(c)
    cache: dict = {}
    used = {abs(l) for c in cls for l in c}
    free = num_vars - len(used)
    return (2 ** free) * _count_set(frozenset(cls), cache)


def _condition(cls, lit):
    out = []
    for c in cls:
        if lit in c:
            continue
        if -lit in c:
            c = c - {-lit}
        out.append(c)
    return out


def _count_set(cls: frozenset, cache: dict) -> int:
    """Models of ``cls`` over exactly the variables occurring in it."""
    if not cls:
        return 1
    hit = cache.get(cls)
    if hit is not None:
        return hit
    vars_before = {abs(l) for c in cls for l in c}
    cur = list(cls)
    # unit propagation
    assigned = set()
    while True:
        if any(len(c) == 0 for c in cur):
            cache[cls] = 0
            return 0
        unit = next((c for c in cur if len(c) == 1), None)
        if unit is None:
            break
        (lit,) = unit
        assigned.add(abs(lit))
        cur = _condition(cur, lit)
    vars_after = {abs(l) for c in cur for l in c}
    freed = len(vars_before) - len(assigned) - len(vars_after)
    result = 2 ** freed
    for comp in _components(cur):
        result *= _count_component(frozenset(comp), cache)
        if result == 0:
            break
    cache[cls] = result
    return result


def _count_component(comp: frozenset, cache: dict) -> int:
    hit = cache.get(comp)
    if hit is not None:
        return hit
    occ: dict[int, int] = {}
    for c in comp:
        for l in c:
            occ[abs(l)] = occ.get(abs(l), 0) + 1
    v = min(occ, key=lambda x: (-occ[x], x))
    vars_all = set(occ)
    total = 0
    for lit in (v, -v):
        sub = _condition(comp, lit)
        rest = {abs(l) for c in sub for l in c}
        if any(len(c) == 0 for c in sub):
            continue
        # variables of the component that vanished (besides v) are free
        gone = len(vars_all) - 1 - len(rest)
        total += (2 ** gone) * _count_set(frozenset(sub), cache)
    cache[comp] = total
    return total


def _components(cls) -> list:
    parent: dict[int, int] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in cls:
        vs = [abs(l) for l in c]
        for a in vs[1:]:
            ra, rb = find(vs[0]), find(a)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list] = {}
    for c in cls:
        groups.setdefault(find(abs(next(iter(c)))), []).append(c)
    return [groups[k] for k in sorted(groups)]


# --- consistency ------------------------------------------------------------------

@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    cnf: Cnf
    witness: dict | None = None
    count: int | None = None
    conflict_step: int | None = None
    conflict_atoms: tuple = ()
    conflict_formulas: tuple = ()
    stats: Stats = field(default_factory=Stats)

    def __bool__(self):
        return self.consistent


def _unsat(c: Cnf, max_conflicts) -> bool:
    return not solve(c, max_conflicts=max_conflicts).satisfiable


def conflict_step(c: Cnf, max_conflicts: int | None = None):
    """Smallest ``T`` whose prefix (clauses mentioning steps ``<= T`` only) is
    unsatisfiable, plus a deletion-minimal unsatisfiable core of that prefix."""
    if c.horizon is None:
        return None, ()
    times = [c.clause_time(k) for k in range(len(c.clauses))]
    lo, hi = -1, c.horizon
    if not _unsat(c.restrict(lambda k: times[k] <= hi), max_conflicts):
        return None, ()
    while lo < hi:
        mid = (lo + hi) // 2
        if _unsat(c.restrict(lambda k: times[k] <= mid), max_conflicts):
            hi = mid
        else:
            lo = mid + 1
    step = hi
    core = [k for k in range(len(c.clauses)) if times[k] <= step]
    if len(core) <= 4000:
        i = 0
        while i < len(core):
            trial = core[:i] + core[i + 1:]
            keep = set(trial)
            if _unsat(c.restrict(lambda k: k in keep), max_conflicts):
                core = trial
            else:
                i += 1
    return (step if step >= 0 else None), tuple(core)


def check_consistency(sigma, model, root=None, horizon: int = 0, grounding: str = "expand",
                      cnf: str = "distribution", count: bool = False,
                      count_method: str = "enumerate", patterns: str = "keep",
                      max_conflicts: int | None = None, max_models: int | None = None,
                      diagnose: bool = True) -> ConsistencyResult:
    """Compile, solve and optionally count; localize conflicts in time."""
    c = compile_theory(sigma, model, root, horizon, grounding, cnf, patterns)
    res = solve(c, max_conflicts=max_conflicts)
    if res.satisfiable:
        n = count_models(c, None, count_method, max_models, max_conflicts) if count else None
        witness = {a: res.witness[a] for a in c.atoms}
        return ConsistencyResult(True, c, witness, n, stats=res.stats)
    step, core = conflict_step(c, max_conflicts) if diagnose else (None, ())
    atoms = sorted({c.label(l) for k in core for l in c.clauses[k]
                    if isinstance(c.label(l), GroundAtom) and c.label(l).time == step}, key=str)
    formulas = tuple(dict.fromkeys(c.origins[k] for k in core))
    return ConsistencyResult(False, c, None, 0 if count else None, step, tuple(atoms),
                             formulas, res.stats)


# --- DIMACS -------------------------------------------------------------------------

def read_dimacs(text: str, map_text: str | None = None) -> Cnf:
    """Parse DIMACS CNF; a sidecar map restores ground-atom labels."""
    n = m = None
    clauses, cur = [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line {line!r}")
            n, m = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(lit)
    if cur:
        clauses.append(tuple(cur))
    if n is None:
        n = max((abs(l) for c in clauses for l in c), default=0)
    if m is not None and m != len(clauses):
        log.warning("DIMACS header declares %d clauses, found %d", m, len(clauses))
    labels: list = list(range(1, n + 1))
    if map_text:
        for line in map_text.splitlines():
            parts = line.split("\t")
            if len(parts) == 4 and parts[1] != "aux":
                v = int(parts[0])
                labels[v - 1] = GroundAtom(parse_term(parts[1]), parts[2], int(parts[3]))
    atoms = tuple(labels)
    return Cnf(atoms, (), tuple(clauses), ("",) * len(clauses), (), None,
               {a: i for i, a in enumerate(atoms, 1)})


def format_model(c: Cnf, assignment: dict) -> str:
    """Signed-index line followed by ``label = value`` lines."""
    items = sorted((c.var(a), b) for a, b in assignment.items())
    head = " ".join(str(v if b else -v) for v, b in items) + " 0"
    body = [f"{c.label(v)} = {'true' if b else 'false'}" for v, b in items]
    return "\n".join([head] + body)
