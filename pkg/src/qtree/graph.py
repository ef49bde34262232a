"""Discrete, metric and quantum graphs.

A :class:`QuantumGraph` is a finite graph whose edges are intervals
``[0, length]`` carrying a potential, together with a coefficient ``alpha``
per vertex for the condition

    f continuous at v,   sum of outgoing derivatives at v = alpha_v * f(v).

``alpha = 0`` is the Kirchhoff condition and ``alpha = inf`` the Dirichlet
condition ``f(v) = 0``.  The coordinate on an edge runs from 0 at ``tail``
to ``length`` at ``head``.

The module also holds the subset machinery used by the atom engine
(:class:`SubsetX`, :func:`components_of_subset`, :func:`boundary`,
:func:`induced_acyclic`, :func:`pure_cycles`) and the finite unfolding of
the universal cover (:func:`unfold`).
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import CapError, ValidationError

INF = math.inf

__all__ = [
    "Zero", "Constant", "PiecewiseConstant", "Sampled", "potential_from_json",
    "Edge", "DiscreteGraph", "QuantumGraph", "SubsetX", "TruncatedTree",
    "normalize", "components_of_subset", "boundary", "induced_acyclic",
    "pure_cycles", "unfold", "load_graph", "load_fixture", "graph_from_dict",
    "graph_to_dict", "dumps", "FIXTURES",
]


# ---------------------------------------------------------------------------
# edge potentials

@dataclass(frozen=True)
class Zero:
    """Vanishing potential."""

    kind = "zero"

    def segments(self, length):
        return [(0.0, float(length), 0.0, 0.0)]

    def bounds(self, length):
        return 0.0, 0.0

    def constant_value(self):
        return 0.0

    def reversed(self, length):
        return self

    def split(self, x, length):
        return self, self

    def to_json(self):
        return {"type": "zero"}


@dataclass(frozen=True)
class Constant:
    """Constant potential ``value`` on the whole edge."""

    value: float
    kind = "constant"

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValidationError("constant potential must be finite")

    def segments(self, length):
        v = float(self.value)
        return [(0.0, float(length), v, v)]

    def bounds(self, length):
        return float(self.value), float(self.value)

    def constant_value(self):
        return float(self.value)

    def reversed(self, length):
        return self

    def split(self, x, length):
        return self, self

    def to_json(self):
        return {"type": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class PiecewiseConstant:
    """Step potential: ``values[i]`` between consecutive breakpoints."""

    breakpoints: tuple
    values: tuple
    kind = "piecewise_constant"

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValidationError("piecewise_constant needs len(values) == len(breakpoints) + 1")
        if any(b1 <= b0 for b0, b1 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValidationError("piecewise_constant breakpoints must increase strictly")
        if not all(np.isfinite(self.values)):
            raise ValidationError("piecewise_constant values must be finite")

    def check(self, length):
        if self.breakpoints and (self.breakpoints[0] <= 0 or self.breakpoints[-1] >= length):
            raise ValidationError("piecewise_constant breakpoints must lie inside (0, length)")

    def segments(self, length):
        knots = (0.0,) + self.breakpoints + (float(length),)
        return [(knots[i], knots[i + 1], v, v) for i, v in enumerate(self.values)]

    def bounds(self, length):
        return min(self.values), max(self.values)

    def constant_value(self):
        return None

    def reversed(self, length):
        return PiecewiseConstant(tuple(length - b for b in reversed(self.breakpoints)),
                                 tuple(reversed(self.values)))

    def split(self, x, length):
        raise ValidationError("split piecewise_constant edges at their breakpoints instead")

    def to_json(self):
        return {"type": "piecewise_constant", "breakpoints": list(self.breakpoints),
                "values": list(self.values)}


@dataclass(frozen=True)
class Sampled:
    """Potential given by samples on a grid, read as its piecewise-linear interpolant."""

    grid: tuple
    values: tuple
    kind = "sampled"

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.grid) < 2 or len(self.grid) != len(self.values):
            raise ValidationError("sampled potential needs matching grid/values of length >= 2")
        if any(x1 <= x0 for x0, x1 in zip(self.grid, self.grid[1:])):
            raise ValidationError("sampled grid must increase strictly")
        if self.grid[0] != 0.0:
            raise ValidationError("sampled grid must start at 0")
        if not all(np.isfinite(self.values)):
            raise ValidationError("sampled values must be finite")

    def check(self, length):
        if not math.isclose(self.grid[-1], length, rel_tol=1e-12, abs_tol=0.0):
            raise ValidationError("sampled grid must end at the edge length")

    def segments(self, length):
        g, v = self.grid, self.values
        return [(g[i], g[i + 1], v[i], v[i + 1]) for i in range(len(g) - 1)]

    def bounds(self, length):
        return min(self.values), max(self.values)

    def constant_value(self):
        return None

    def reversed(self, length):
        grid = tuple(self.grid[-1] - x for x in reversed(self.grid))
        return Sampled((0.0,) + grid[1:], tuple(reversed(self.values)))

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    def split(self, x, length):
        g = np.asarray(self.grid)
        wx = float(self(x))
        left = [t for t in g if t < x]
        right = [t for t in g if t > x]
        lv = [v for t, v in zip(g, self.values) if t < x] + [wx]
        rv = [wx] + [v for t, v in zip(g, self.values) if t > x]
        lg = left + [x]
        rg = [0.0] + [t - x for t in right]
        rg[-1] = self.grid[-1] - x
        return Sampled(tuple(lg), tuple(lv)), Sampled(tuple(rg), tuple(rv))

    def to_json(self):
        return {"type": "sampled", "grid": list(self.grid), "values": list(self.values)}


def potential_from_json(d) -> Zero | Constant | PiecewiseConstant | Sampled:
    """Parse the ``potential`` field of an edge record."""
    if d is None:
        return Zero()
    if not isinstance(d, Mapping) or "type" not in d:
        raise ValidationError(f"bad potential record: {d!r}")
    kind = d["type"]
    try:
        if kind == "zero":
            return Zero()
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind == "piecewise_constant":
            return PiecewiseConstant(tuple(d["breakpoints"]), tuple(d["values"]))
        if kind == "sampled":
            return Sampled(tuple(d["grid"]), tuple(d["values"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad potential record: {d!r}") from exc
    raise ValidationError(f"unknown potential type {kind!r}")


# ---------------------------------------------------------------------------
# graphs

@dataclass(frozen=True)
class Edge:
    """An oriented metric edge from ``tail`` (x = 0) to ``head`` (x = length)."""

    id: str
    tail: str
    head: str
    length: float
    potential: Zero | Constant | PiecewiseConstant | Sampled = field(default_factory=Zero)

    def __post_init__(self):
        object.__setattr__(self, "length", float(self.length))
        if not (self.length > 0 and np.isfinite(self.length)):
            raise ValidationError(f"edge {self.id}: length must be positive and finite")
        check = getattr(self.potential, "check", None)
        if check is not None:
            check(self.length)

    @property
    def is_loop(self):
        return self.tail == self.head

    def other(self, v):
        return self.head if v == self.tail else self.tail

    def reversed(self) -> "Edge":
        """The same edge seen from ``head``; the coordinate becomes ``length - x``."""
        return Edge(self.id, self.head, self.tail, self.length,
                    self.potential.reversed(self.length))


@dataclass(frozen=True)
class DiscreteGraph:
    """Vertices and edges ``(id, tail, head)``, kept in sorted-id order."""

    vertices: tuple
    edges: tuple

    def __post_init__(self):
        vs = tuple(sorted(str(v) for v in self.vertices))
        es = tuple(sorted((str(e), str(a), str(b)) for e, a, b in self.edges))
        if len(set(vs)) != len(vs):
            raise ValidationError("duplicate vertex id")
        if len({e for e, _, _ in es}) != len(es):
            raise ValidationError("duplicate edge id")
        known = set(vs)
        for e, a, b in es:
            if a not in known or b not in known:
                raise ValidationError(f"edge {e} references an unknown vertex")
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", es)

    @cached_property
    def vertex_index(self):
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index(self):
        return {e: i for i, (e, _, _) in enumerate(self.edges)}

    @cached_property
    def incidence(self):
        """Map vertex -> tuple of ``(edge id, end)``; ``end`` is 0 at the tail, 1 at the head."""
        inc = {v: [] for v in self.vertices}
        for e, a, b in self.edges:
            inc[a].append((e, 0))
            inc[b].append((e, 1))
        return {v: tuple(x) for v, x in inc.items()}

    def degree(self, v):
        return len(self.incidence[v])

    def neighbors(self, v):
        out = []
        for e, end in self.incidence[v]:
            _, a, b = self.edges[self.edge_index[e]]
            out.append(b if end == 0 else a)
        return out

    def is_simple(self):
        seen = set()
        for _, a, b in self.edges:
            if a == b:
                return False
            key = frozenset((a, b))
            if key in seen:
                return False
            seen.add(key)
        return True

    def is_connected(self):
        if not self.vertices:
            return True
        seen = {self.vertices[0]}
        todo = [self.vertices[0]]
        while todo:
            v = todo.pop()
            for u in self.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        return len(seen) == len(self.vertices)


@dataclass(frozen=True, eq=False)
class QuantumGraph:
    """Compact quantum graph.

    Parameters
    ----------
    alpha : mapping of vertex id -> float
        Condition coefficient per vertex; ``math.inf`` marks a Dirichlet vertex.
    edges : iterable of Edge
        Metric edges with potentials.

    Notes
    -----
    Instances are immutable; every transformation returns a new graph.
    Vertices and edges are ordered by sorted id.
    """

    alpha: Mapping
    edges: tuple

    def __init__(self, alpha: Mapping, edges: Iterable[Edge]):
        al = {}
        for v, a in alpha.items():
            a = float(a)
            if math.isnan(a) or a == -INF:
                raise ValidationError(f"vertex {v}: alpha must be real or +inf")
            al[str(v)] = a
        es = tuple(sorted(edges, key=lambda e: e.id))
        object.__setattr__(self, "alpha", dict(sorted(al.items())))
        object.__setattr__(self, "edges", es)
        _ = self.graph  # validates ids

    def __eq__(self, other):
        if not isinstance(other, QuantumGraph):
            return NotImplemented
        return self.alpha == other.alpha and self.edges == other.edges

    def __hash__(self):
        return hash((tuple(self.alpha.items()), self.edges))

    def __repr__(self):
        return f"QuantumGraph(|V|={len(self.vertices)}, |E|={len(self.edges)})"

    @cached_property
    def graph(self) -> DiscreteGraph:
        return DiscreteGraph(tuple(self.alpha), tuple((e.id, e.tail, e.head) for e in self.edges))

    @property
    def vertices(self):
        return self.graph.vertices

    @cached_property
    def edge(self):
        """Map edge id -> :class:`Edge`."""
        return {e.id: e for e in self.edges}

    @property
    def incidence(self):
        return self.graph.incidence

    def degree(self, v):
        return self.graph.degree(v)

    @cached_property
    def total_length(self):
        """Sum of edge lengths."""
        return float(math.fsum(e.length for e in self.edges))

    @cached_property
    def interior(self):
        """Vertices with a finite condition coefficient."""
        return tuple(v for v in self.vertices if self.alpha[v] < INF)

    @cached_property
    def potential_bounds(self):
        """Map edge id -> (min W, max W) on that edge."""
        return {e.id: e.potential.bounds(e.length) for e in self.edges}

    def is_normalized(self):
        return self.graph.is_simple() and not any(
            isinstance(e.potential, PiecewiseConstant) for e in self.edges)

    def has_zero_potential(self):
        return all(e.potential.constant_value() == 0.0 for e in self.edges)

    def replace(self, alpha=None, edges=None) -> "QuantumGraph":
        return QuantumGraph(self.alpha if alpha is None else alpha,
                            self.edges if edges is None else edges)

    def with_lengths(self, lengths: Mapping) -> "QuantumGraph":
        """Copy with new edge lengths; potentials must be constant."""
        new = []
        for e in self.edges:
            if e.potential.constant_value() is None:
                raise ValidationError("rescaling lengths needs constant potentials")
            new.append(Edge(e.id, e.tail, e.head, lengths.get(e.id, e.length), e.potential))
        return QuantumGraph(self.alpha, new)


# ---------------------------------------------------------------------------
# JSON

def _fmt_alpha(a):
    return "inf" if a == INF else a


def graph_to_dict(g: QuantumGraph) -> dict:
    """Serialize to the JSON graph format."""
    return {
        "vertices": [{"id": v, "alpha": _fmt_alpha(g.alpha[v])} for v in g.vertices],
        "edges": [{"id": e.id, "from": e.tail, "to": e.head, "length": e.length,
                   "potential": e.potential.to_json()} for e in g.edges],
    }


def graph_from_dict(d) -> QuantumGraph:
    """Parse the JSON graph format, raising :class:`ValidationError` on bad input."""
    if not isinstance(d, Mapping) or "vertices" not in d or "edges" not in d:
        raise ValidationError("graph JSON needs 'vertices' and 'edges'")
    alpha = {}
    for rec in d["vertices"]:
        try:
            vid, a = str(rec["id"]), rec.get("alpha", 0.0)
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"bad vertex record {rec!r}") from exc
        if isinstance(a, str):
            if a.lower() not in ("inf", "+inf", "infinity"):
                raise ValidationError(f"vertex {vid}: alpha must be a number or 'inf'")
            a = INF
        if isinstance(a, bool) or not isinstance(a, (int, float)):
            raise ValidationError(f"vertex {vid}: alpha must be a number or 'inf'")
        if vid in alpha:
            raise ValidationError(f"duplicate vertex id {vid}")
        alpha[vid] = float(a)
    edges = []
    for rec in d["edges"]:
        try:
            length = rec["length"]
            if isinstance(length, bool) or not isinstance(length, (int, float)):
                raise ValidationError(f"edge {rec.get('id')}: length must be a number")
            edges.append(Edge(str(rec["id"]), str(rec["from"]), str(rec["to"]), float(length),
                              potential_from_json(rec.get("potential"))))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"bad edge record {rec!r}") from exc
    return QuantumGraph(alpha, edges)


FIXTURES = ("fig2", "k5", "cycle", "lollipop", "interval")


def load_fixture(name: str) -> QuantumGraph:
    """Load one of the bundled graphs by name (``fig2``, ``k5``, ...)."""
    name = name[:-5] if name.endswith(".json") else name
    if name not in FIXTURES:
        raise ValidationError(f"unknown fixture {name!r}")
    text = resources.files("qtree.fixtures").joinpath(f"{name}.json").read_text()
    return graph_from_dict(json.loads(text))


def load_graph(path) -> QuantumGraph:
    """Read a graph file; a bare fixture name such as ``fig2.json`` also works."""
    p = Path(path)
    if not p.exists():
        stem = p.name[:-5] if p.name.endswith(".json") else p.name
        if stem in FIXTURES and p.parent == Path("."):
            return load_fixture(stem)
        raise ValidationError(f"graph file not found: {path}")
    try:
        d = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from exc
    return graph_from_dict(d)


def _encode(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        s = format(x, ".17g")
        if "." not in s and "e" not in s and "n" not in s:
            s += ".0"
        return s
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with sorted keys and floats written with 17 significant digits."""
    return _encode(obj)


# ---------------------------------------------------------------------------
# normalization

def _fresh(name, taken):
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def normalize(g: QuantumGraph) -> QuantumGraph:
    """Make the graph simple with constant or sampled potentials on every edge.

    Breakpoints of step potentials become Kirchhoff vertices, loops are
    split at their midpoint, and of several parallel edges all but the one
    with the smallest id are split at their midpoint.  A halved loop is
    itself a parallel pair, so its second half is split once more.  New vertices get
    ``alpha = 0``, so the operator and its spectrum are unchanged.
    """
    vtaken = set(g.vertices)
    etaken = set(g.edge)
    alpha = dict(g.alpha)

    stage = []
    for e in g.edges:
        if isinstance(e.potential, PiecewiseConstant) and e.potential.breakpoints:
            etaken.discard(e.id)
            knots = (0.0,) + e.potential.breakpoints + (e.length,)
            names = [e.tail]
            for i in range(len(e.potential.breakpoints)):
                names.append(_fresh(f"{e.id}@{i + 1}", vtaken))
                alpha[names[-1]] = 0.0
            names.append(e.head)
            for i, w in enumerate(e.potential.values):
                stage.append(Edge(_fresh(f"{e.id}#{i}", etaken), names[i], names[i + 1],
                                  knots[i + 1] - knots[i], Constant(w)))
        elif isinstance(e.potential, PiecewiseConstant):
            stage.append(Edge(e.id, e.tail, e.head, e.length, Constant(e.potential.values[0])))
        else:
            stage.append(e)

    def halve(e):
        etaken.discard(e.id)
        mid = _fresh(f"{e.id}@mid", vtaken)
        alpha[mid] = 0.0
        left, right = e.potential.split(e.length / 2, e.length)
        return [Edge(_fresh(f"{e.id}#0", etaken), e.tail, mid, e.length / 2, left),
                Edge(_fresh(f"{e.id}#1", etaken), mid, e.head, e.length - e.length / 2, right)]

    # a halved loop is a parallel pair, so loops go first
    unlooped = []
    for e in stage:
        unlooped.extend(halve(e) if e.is_loop else [e])
    out = []
    seen = set()
    for e in sorted(unlooped, key=lambda e: e.id):
        key = frozenset((e.tail, e.head))
        if key in seen:
            out.extend(halve(e))
        else:
            seen.add(key)
            out.append(e)
    return QuantumGraph(alpha, out)


# ---------------------------------------------------------------------------
# subsets

@dataclass(frozen=True)
class SubsetX:
    """A set of vertices and edges of a graph, as in a candidate support set."""

    vset: frozenset = frozenset()
    eset: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "vset", frozenset(self.vset))
        object.__setattr__(self, "eset", frozenset(self.eset))

    def __or__(self, other):
        return SubsetX(self.vset | other.vset, self.eset | other.eset)

    def is_empty(self):
        return not self.vset and not self.eset

    def to_json(self):
        return {"vertices": sorted(self.vset), "edges": sorted(self.eset)}


def _check_closure(g: QuantumGraph, x: SubsetX):
    unknown_v = x.vset - set(g.vertices)
    unknown_e = x.eset - set(g.edge)
    if unknown_v or unknown_e:
        raise ValidationError(f"subset references unknown ids {sorted(unknown_v | unknown_e)}")
    for v in x.vset:
        missing = [e for e, _ in g.incidence[v] if e not in x.eset]
        if missing:
            raise ValidationError(f"closure violated at vertex {v}: edges {missing} missing")
        if not g.incidence[v]:
            raise ValidationError(f"vertex {v} has no edges; isolated vertices are not supported")


def components_of_subset(g: QuantumGraph, x: SubsetX) -> list:
    """Split ``x`` into connected pieces.

    Two edges of ``x`` are joined when they share a vertex that belongs to
    ``x.vset``; a shared vertex outside ``x.vset`` does not join them.

    Returns
    -------
    list of SubsetX
        Sorted by their smallest edge id.
    """
    _check_closure(g, x)
    parent = {e: e for e in x.eset}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for v in x.vset:
        es = [e for e, _ in g.incidence[v]]
        for e in es[1:]:
            ra, rb = find(es[0]), find(e)
            if ra != rb:
                parent[ra] = rb
    groups = {}
    for e in x.eset:
        groups.setdefault(find(e), set()).add(e)
    comps = []
    for es in groups.values():
        vs = {v for v in x.vset if any(e in es for e, _ in g.incidence[v])}
        comps.append(SubsetX(vs, es))
    comps.sort(key=lambda c: min(c.eset))
    return comps


def boundary(g: QuantumGraph, x: SubsetX):
    """Vertices outside ``x.vset`` touching ``x.eset``.

    Returns
    -------
    finite : frozenset
        Those with finite ``alpha``.
    dirichlet : frozenset
        Those with ``alpha = inf``.
    """
    _check_closure(g, x)
    touched = set()
    for eid in x.eset:
        e = g.edge[eid]
        touched.update((e.tail, e.head))
    touched -= x.vset
    finite = frozenset(v for v in touched if g.alpha[v] < INF)
    return finite, frozenset(touched - finite)


def induced_acyclic(g: DiscreteGraph | QuantumGraph, s) -> bool:
    """True iff the subgraph induced by the vertex set ``s`` is a forest."""
    dg = g.graph if isinstance(g, QuantumGraph) else g
    s = set(s)
    parent = {v: v for v in s}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for _, a, b in dg.edges:
        if a in s and b in s:
            if a == b:
                return False
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
    return True


def pure_cycles(g: QuantumGraph) -> list:
    """Cycles whose vertices all have degree 2, except at most one attachment vertex.

    Returns
    -------
    list of (tuple of edge ids, attachment vertex or None)
        ``None`` marks a cycle that is a whole connected component.
    """
    dg = g.graph
    deg2 = {v for v in dg.vertices if dg.degree(v) == 2}
    seen = set()
    out = []
    for start in sorted(deg2):
        if start in seen:
            continue
        # collect the run of degree-2 vertices through `start`
        run = {start}
        todo = [start]
        while todo:
            v = todo.pop()
            for u in dg.neighbors(v):
                if u in deg2 and u not in run:
                    run.add(u)
                    todo.append(u)
        seen |= run
        edges = set()
        ends = []
        for v in run:
            for eid, _ in dg.incidence[v]:
                edges.add(eid)
                e = g.edge[eid]
                u = e.other(v)
                if u not in run or e.is_loop:
                    ends.append(u if u not in run else None)
        if not ends:
            out.append((tuple(sorted(edges)), None))
        elif len(ends) == 2 and ends[0] is not None and ends[0] == ends[1]:
            out.append((tuple(sorted(edges)), ends[0]))
    out.sort()
    return out


# ---------------------------------------------------------------------------
# unfolding of the universal cover

@dataclass(frozen=True, eq=False)
class TruncatedTree:
    """A finite ball in the universal cover, cut at a fixed combinatorial depth.

    Attributes
    ----------
    tree : QuantumGraph
        The ball; cut vertices carry ``alpha = inf``.
    cover_map : dict
        Tree vertex or edge id -> base vertex or edge id.
    frontier : frozenset
        Cut vertices, where base edges were dropped.
    depth : dict
        Tree vertex id -> combinatorial distance from the root.
    root : str
    """

    tree: QuantumGraph
    cover_map: dict
    frontier: frozenset
    depth: dict
    root: str


def unfold(g: QuantumGraph, root: str, depth: int, max_vertices: int = 20000) -> TruncatedTree:
    """Non-backtracking breadth-first unfolding of ``g`` around ``root``.

    Every tree edge is oriented like its image, so it carries exactly the
    same length and potential.  Vertices at the final depth that lose edges
    become Dirichlet (``alpha = inf``); all other vertices keep their
    ``alpha``.

    Raises
    ------
    ValidationError
        Unknown root, or ``depth == 0`` at a root with edges.
    CapError
        The ball would exceed ``max_vertices``.
    """
    if root not in g.alpha:
        raise ValidationError(f"unknown root vertex {root}")
    if depth < 0 or (depth == 0 and g.degree(root) > 0):
        raise ValidationError("depth 0 would leave only a cut root; use depth >= 1")
    if not g.graph.is_simple():
        raise ValidationError("unfold needs a normalized graph")
    cmap = {}
    dist = {}
    alpha = {}
    edges = []
    counter = {}

    def new_vertex(base):
        k = counter.get(base, 0)
        counter[base] = k + 1
        vid = f"{base}.{k}"
        cmap[vid] = base
        alpha[vid] = g.alpha[base]
        return vid

    r = new_vertex(root)
    dist[r] = 0
    queue = deque([(r, None)])
    frontier = set()
    ecount = {}
    while queue:
        t, via = queue.popleft()
        b = cmap[t]
        if dist[t] == depth:
            if g.degree(b) > (0 if via is None else 1):
                frontier.add(t)
                alpha[t] = INF
            continue
        for eid, end in g.incidence[b]:
            if eid == via:
                continue
            e = g.edge[eid]
            u = new_vertex(e.other(b))
            dist[u] = dist[t] + 1
            if len(alpha) > max_vertices:
                raise CapError(f"unfold exceeds {max_vertices} vertices")
            k = ecount.get(eid, 0)
            ecount[eid] = k + 1
            tid = f"{eid}.{k}"
            cmap[tid] = eid
            tail, head = (t, u) if end == 0 else (u, t)
            edges.append(Edge(tid, tail, head, e.length, e.potential))
            queue.append((u, eid))
    return TruncatedTree(QuantumGraph(alpha, edges), cmap, frozenset(frontier), dist, r)
