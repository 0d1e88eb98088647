"""Hierarchical spatial graph, spatial-temporal signals and the interpretation table.

Model document (``.gm``)::

    # comments start with '#'
    epsilon = 1/2
    [layer]
    kitchen   kitchen
    [layer]
    hand      hand        0 1 0 1 0 1
    cup       "coffee cup" 1 2 0 1 0 1
    [parents]
    kitchen hand
    [neighbors]
    hand cup

Each ``[layer]`` section opens the next layer; a node record is
``id label [lo_x hi_x lo_y hi_y lo_z hi_z]``.  Coordinates are rationals
(``3``, ``1/2``, ``0.25``).  Neighbor edges between boxed nodes of one layer
closer than ``epsilon`` are added automatically.

Signal document (``.sig``)::

    horizon: 5
    pred warm: temp > 20
    pred cup: label == cup
    pred p: bool p
    n1, 0..5, temp=21 label=cup p=true
    n1, 3, temp=19 label=cup p=false

Rows are ``node, time, value``; ``time`` may be a range ``a..b`` and a later
row overrides an earlier one.  ``value`` is a bare literal (stored in the
channel ``value``) or whitespace-separated ``channel=literal`` pairs.
"""
from __future__ import annotations

import itertools
import shlex
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping

from .algebra import Box3, box_min_distance_sq
from .errors import (CrossLayerParent, MissingInterpretation, ModelFormatError,
                     OutOfHorizon, SameLayerViolation, UnknownNode)


@dataclass(frozen=True)
class Node:
    id: str
    label: str
    layer: int
    box: Box3 | None = None


def _pair(u, v):
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True, eq=False)
class SpatialModel:
    """Layered node graph; build through :func:`build_model` or :meth:`SpatialModel.create`."""

    layers: tuple
    nodes: Mapping[str, Node]
    parent_edges: frozenset
    neighbor_edges: frozenset
    epsilon: Fraction = Fraction(0)
    _parents: Mapping = field(default=None, repr=False)
    _children: Mapping = field(default=None, repr=False)
    _neighbors: Mapping = field(default=None, repr=False)

    @classmethod
    def create(cls, layers, parent_edges=(), neighbor_edges=(), epsilon=0):
        """Validate and index a model.

        ``layers`` is a sequence of layers, each a sequence of ``Node`` or
        ``(id, label[, box])`` tuples.  Implicit epsilon-neighbors are derived.
        """
        epsilon = Fraction(epsilon) if not isinstance(epsilon, float) else Fraction(repr(epsilon))
        if epsilon < 0:
            raise ModelFormatError("epsilon must be non-negative")
        nodes: dict[str, Node] = {}
        layer_ids = []
        for k, layer in enumerate(layers):
            ids = []
            for rec in layer:
                if not isinstance(rec, Node):
                    rec = Node(rec[0], rec[1] if len(rec) > 1 else rec[0], k,
                               rec[2] if len(rec) > 2 else None)
                else:
                    rec = Node(rec.id, rec.label, k, rec.box)
                if rec.id in nodes:
                    raise ModelFormatError(f"duplicate node id {rec.id!r}")
                nodes[rec.id] = rec
                ids.append(rec.id)
            layer_ids.append(tuple(ids))

        parents = set()
        for p, c in parent_edges:
            for v in (p, c):
                if v not in nodes:
                    raise UnknownNode(v)
            if nodes[c].layer != nodes[p].layer + 1:
                raise CrossLayerParent(f"{p!r} -> {c!r} does not join adjacent layers")
            parents.add((p, c))

        neighbors = set()
        for u, v in neighbor_edges:
            for w in (u, v):
                if w not in nodes:
                    raise UnknownNode(w)
            if u == v:
                raise SameLayerViolation(f"self-neighbor {u!r}")
            if nodes[u].layer != nodes[v].layer:
                raise SameLayerViolation(f"neighbors {u!r}, {v!r} lie in different layers")
            neighbors.add(_pair(u, v))
        has_parent = {c for _, c in parents}
        for ids in layer_ids[1:]:
            for v in ids:
                if v not in has_parent:
                    raise ModelFormatError(f"node {v!r} below the top layer has no parent")
        eps_sq = epsilon * epsilon
        for ids in layer_ids:
            boxed = [i for i in ids if nodes[i].box is not None]
            for u, v in itertools.combinations(boxed, 2):
                if box_min_distance_sq(nodes[u].box, nodes[v].box) < eps_sq:
                    neighbors.add(_pair(u, v))

        par = {v: set() for v in nodes}
        chi = {v: set() for v in nodes}
        nbr = {v: set() for v in nodes}
        for p, c in parents:
            par[c].add(p)
            chi[p].add(c)
        for u, v in neighbors:
            nbr[u].add(v)
            nbr[v].add(u)
        freeze = lambda d: MappingProxyType({k: frozenset(s) for k, s in d.items()})
        return cls(tuple(layer_ids), MappingProxyType(nodes), frozenset(parents),
                   frozenset(neighbors), epsilon, freeze(par), freeze(chi), freeze(nbr))

    def _lookup(self, table, v):
        try:
            return table[v]
        except KeyError:
            raise UnknownNode(v) from None

    def parents(self, v) -> frozenset:
        return self._lookup(self._parents, v)

    def children(self, v) -> frozenset:
        return self._lookup(self._children, v)

    def neighbors(self, v) -> frozenset:
        return self._lookup(self._neighbors, v)

    def relatives(self, kind: str, v) -> frozenset:
        return {"P": self.parents, "C": self.children, "N": self.neighbors}[kind](v)

    def box(self, v) -> Box3 | None:
        return self._lookup(self.nodes, v).box

    @property
    def roots(self) -> tuple:
        return tuple(v for v in self.layers[0]) if self.layers else ()

    def __eq__(self, other):
        if not isinstance(other, SpatialModel):
            return NotImplemented
        return (self.layers, dict(self.nodes), self.parent_edges, self.neighbor_edges,
                self.epsilon) == (other.layers, dict(other.nodes), other.parent_edges,
                                  other.neighbor_edges, other.epsilon)

    def __hash__(self):
        return hash((self.layers, self.parent_edges, self.neighbor_edges, self.epsilon))


def _fraction(tok: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ModelFormatError(f"not a rational number: {tok!r}") from None


def _content_lines(text):
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if " #" in line:
            line = line.split(" #", 1)[0].rstrip()
        yield n, line


def build_model(text: str, epsilon_override=None) -> SpatialModel:
    """Parse a model document into a validated :class:`SpatialModel`.

    ``epsilon_override`` replaces the document's ``epsilon`` line.
    """
    layers: list[list] = []
    parents, neighbors = [], []
    epsilon = Fraction(0)
    section = None
    for n, line in _content_lines(text):
        if line.startswith("["):
            name = line.strip("[]").strip().split()[0].lower()
            if name not in ("layer", "parents", "neighbors"):
                raise ModelFormatError(f"line {n}: unknown section {line!r}")
            section = name
            if name == "layer":
                layers.append([])
            continue
        if section is None:
            key, sep, value = line.partition("=") if "=" in line else line.partition(":")
            if key.strip().lower() != "epsilon" or not sep:
                raise ModelFormatError(f"line {n}: expected 'epsilon = <rational>'")
            epsilon = _fraction(value.strip())
            continue
        try:
            toks = shlex.split(line, comments=True)
        except ValueError as exc:
            raise ModelFormatError(f"line {n}: {exc}") from None
        if not toks:
            continue
        if section == "layer":
            if len(toks) not in (1, 2, 8):
                raise ModelFormatError(f"line {n}: node record needs id, label and 0 or 6 coordinates")
            label = toks[1] if len(toks) > 1 else toks[0]
            box = None
            if len(toks) == 8:
                box = Box3.from_bounds(*(_fraction(t) for t in toks[2:]))
            layers[-1].append((toks[0], label, box))
        else:
            if len(toks) != 2:
                raise ModelFormatError(f"line {n}: expected a pair of node ids")
            (parents if section == "parents" else neighbors).append(tuple(toks))
    if epsilon_override is not None:
        epsilon = _fraction(str(epsilon_override))
    return SpatialModel.create(layers, parents, neighbors, epsilon)


def _fmt(q: Fraction) -> str:
    return str(q)


def serialize_model(m: SpatialModel) -> str:
    out = [f"epsilon = {_fmt(m.epsilon)}"]
    for ids in m.layers:
        out.append("[layer]")
        for i in ids:
            node = m.nodes[i]
            rec = [shlex.quote(node.id), shlex.quote(node.label)]
            if node.box is not None:
                rec += [_fmt(c) for c in node.box.bounds()]
            out.append(" ".join(rec))
    if m.parent_edges:
        out.append("[parents]")
        out += [f"{p} {c}" for p, c in sorted(m.parent_edges)]
    if m.neighbor_edges:
        out.append("[neighbors]")
        out += [f"{u} {v}" for u, v in sorted(m.neighbor_edges)]
    return "\n".join(out) + "\n"


def single_node_model(node: str = "v") -> SpatialModel:
    return SpatialModel.create([[(node, node)]])


# --- signals -----------------------------------------------------------------

DEFAULT_CHANNEL = "value"


@dataclass(frozen=True, eq=False)
class Signal:
    """Total map ``(node, t) -> {channel: value}`` for ``t`` in ``0..horizon``."""

    horizon: int
    values: Mapping

    def at(self, v, t) -> Mapping:
        if not 0 <= t <= self.horizon:
            raise OutOfHorizon(f"time {t} outside [0, {self.horizon}]")
        try:
            return self.values[(v, t)]
        except KeyError:
            raise OutOfHorizon(f"no signal value for node {v!r} at time {t}") from None

    def nodes(self) -> set:
        return {v for v, _ in self.values}

    @classmethod
    def from_atoms(cls, horizon: int, truth: Mapping, nodes=None) -> "Signal":
        """Boolean signal from ``{(atom, node, t): bool}``; one channel per atom."""
        vals: dict = {}
        nodes = set(nodes or ())
        for (atom, v, t), b in truth.items():
            vals.setdefault((v, t), {})[atom] = bool(b)
            nodes.add(v)
        for v in nodes:
            for t in range(horizon + 1):
                vals.setdefault((v, t), {})
        return cls(horizon, MappingProxyType({k: MappingProxyType(d) for k, d in vals.items()}))


@dataclass(frozen=True)
class Predicate:
    """How one atomic predicate reads a signal value.

    ``kind`` is ``threshold`` (sign of ``value - level``, flipped when
    ``above`` is false), ``label`` (categorical equality) or ``bool``.
    """

    kind: str
    channel: str = DEFAULT_CHANNEL
    level: float | str | None = None
    above: bool = True

    def score(self, sample: Mapping) -> float:
        if self.channel not in sample:
            # absent boolean channel reads as false
            if self.kind == "bool":
                return -1.0
            raise KeyError(self.channel)
        x = sample[self.channel]
        if self.kind == "bool":
            return 1.0 if _truthy(x) else -1.0
        if self.kind == "label":
            return 1.0 if str(x) == str(self.level) else -1.0
        d = float(x) - float(self.level)
        return d if self.above else -d


def _truthy(x) -> bool:
    if isinstance(x, str):
        return x.strip().lower() in ("1", "true", "t", "yes")
    return bool(x)


@dataclass(frozen=True, eq=False)
class Interpretation:
    table: Mapping

    @classmethod
    def booleans(cls, names) -> "Interpretation":
        """Each predicate reads the boolean channel of the same name."""
        return cls(MappingProxyType({n: Predicate("bool", n) for n in names}))

    def __getitem__(self, mu) -> Predicate:
        try:
            return self.table[mu]
        except KeyError:
            raise MissingInterpretation(mu) from None

    def score(self, mu, sample) -> float:
        return self[mu].score(sample)


def atom_holds(interp: Interpretation, signal: Signal, mu: str, v, t: int) -> bool:
    pred = interp[mu]
    return pred.score(signal.at(v, t)) > 0


def _literal(tok: str):
    low = tok.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        return tok


def _parse_pred(spec: str, n: int) -> Predicate:
    toks = spec.split()
    if len(toks) == 2 and toks[0] == "bool":
        return Predicate("bool", toks[1])
    if len(toks) == 1 and toks[0] == "bool":
        return Predicate("bool")
    if len(toks) == 3 and toks[1] in (">", "<"):
        try:
            level = float(toks[2])
        except ValueError:
            raise ModelFormatError(f"line {n}: threshold must be numeric") from None
        return Predicate("threshold", toks[0], level, toks[1] == ">")
    if len(toks) == 3 and toks[1] == "==":
        return Predicate("label", toks[0], toks[2])
    raise ModelFormatError(f"line {n}: cannot read predicate spec {spec!r}")


def load_signal(text: str, model: SpatialModel | None = None):
    """Parse a signal document; returns ``(Signal, Interpretation)``."""
    horizon = None
    preds: dict[str, Predicate] = {}
    vals: dict = {}
    for n, line in _content_lines(text):
        if line.lower().startswith("horizon"):
            try:
                horizon = int(line.split(":", 1)[1])
            except (IndexError, ValueError):
                raise ModelFormatError(f"line {n}: expected 'horizon: <int>'") from None
            continue
        if line.startswith("pred "):
            name, sep, spec = line[5:].partition(":")
            if not sep:
                raise ModelFormatError(f"line {n}: expected 'pred <name>: <spec>'")
            preds[name.strip()] = _parse_pred(spec.strip(), n)
            continue
        parts = [p.strip() for p in line.split(",", 2)]
        if len(parts) != 3:
            raise ModelFormatError(f"line {n}: expected 'node, time, value'")
        node, times, value = parts
        if model is not None and node not in model.nodes:
            raise UnknownNode(node)
        try:
            if ".." in times:
                lo, hi = (int(x) for x in times.split(".."))
                steps = range(lo, hi + 1)
            else:
                steps = [int(times)]
        except ValueError:
            raise ModelFormatError(f"line {n}: bad time {times!r}") from None
        if "=" in value:
            sample = {}
            for tok in shlex.split(value):
                k, sep, lit = tok.partition("=")
                if not sep:
                    raise ModelFormatError(f"line {n}: expected channel=value, got {tok!r}")
                sample[k] = _literal(lit)
        else:
            sample = {DEFAULT_CHANNEL: _literal(value)}
        for t in steps:
            vals.setdefault((node, t), {}).update(sample)
    if horizon is None:
        raise ModelFormatError("signal document lacks 'horizon: H'")
    for v, t in vals:
        if not 0 <= t <= horizon:
            raise OutOfHorizon(f"row for {v!r} at time {t} outside [0, {horizon}]")
    nodes = {v for v, _ in vals}
    missing = [(v, t) for v in sorted(nodes) for t in range(horizon + 1) if (v, t) not in vals]
    if missing:
        v, t = missing[0]
        raise ModelFormatError(f"signal has no value for node {v!r} at time {t} "
                               f"({len(missing)} gaps in total)")
    sig = Signal(horizon, MappingProxyType({k: MappingProxyType(d) for k, d in vals.items()}))
    return sig, Interpretation(MappingProxyType(preds))
