"""Discrete graphs attached to a quantum graph at a fixed ``lam``.

* The derived graph turns the eigenvalue equation at ``lam`` into the
  kernel of a Jacobi matrix.  Each vertex ``v`` with finite ``alpha`` has a
  principal copy carrying the value ``h(v)``; every edge end at ``v`` has a
  shadow copy carrying the outgoing derivative there.
* The bipartite companion of an atom joins one representative vertex per
  piece of the maximizing set to the finite boundary, weighted by the
  outgoing derivatives of the piece's eigenfunction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .aomoto import AomotoReport, component_eigenfunction
from .compact import Eigenpair, eigenfunction_vertex_trace
from .errors import ValidationError
from .graph import INF, DiscreteGraph, QuantumGraph
from .transfer import transfer

__all__ = [
    "WeightedDiscreteGraph", "DerivedGraph", "BipartiteCompanion", "derive", "jacobi_apply",
    "jacobi_matrix", "gamma_map", "companion", "coupling_matrix", "index_identity_check",
    "principal_id", "shadow_id",
]


def principal_id(v: str) -> str:
    return f"p:{v}"


def shadow_id(v: str, eid: str) -> str:
    return f"s:{v}:{eid}"


@dataclass(frozen=True, eq=False)
class WeightedDiscreteGraph:
    """Discrete graph with real edge weights ``a`` and vertex potential ``b``.

    Parallel edges are allowed; their weights add up in the Jacobi matrix.
    """

    graph: DiscreteGraph
    a: dict
    b: dict

    def __post_init__(self):
        for e, _, _ in self.graph.edges:
            if e not in self.a or not math.isfinite(self.a[e]):
                raise ValidationError(f"edge {e} has no finite weight")
        for v in self.graph.vertices:
            if not math.isfinite(self.b.get(v, 0.0)):
                raise ValidationError(f"vertex {v} has a non-finite potential")

    @property
    def vertices(self):
        return self.graph.vertices

    @cached_property
    def _arrays(self):
        idx = self.graph.vertex_index
        rows = np.array([idx[t] for _, t, _ in self.graph.edges], dtype=int)
        cols = np.array([idx[h] for _, _, h in self.graph.edges], dtype=int)
        w = np.array([self.a[e] for e, _, _ in self.graph.edges], dtype=float)
        b = np.array([self.b.get(v, 0.0) for v in self.graph.vertices], dtype=float)
        return rows, cols, w, b

    def to_json(self):
        return {
            "vertices": [{"id": v, "b": float(self.b.get(v, 0.0))} for v in self.graph.vertices],
            "edges": [{"id": e, "from": t, "to": h, "a": float(self.a[e])}
                      for e, t, h in self.graph.edges],
        }


def jacobi_apply(wg: WeightedDiscreteGraph, eta) -> np.ndarray:
    """``(A eta)(v) = b_v eta(v) + sum over edges at v of a_e eta(other end)``.

    ``eta`` is an array ordered like ``wg.vertices`` or a mapping keyed by vertex.
    """
    if isinstance(eta, dict):
        if set(eta) != set(wg.vertices):
            raise ValidationError("vector keys do not match the graph vertices")
        eta = np.array([eta[v] for v in wg.vertices], dtype=float)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (len(wg.vertices),):
        raise ValidationError(f"vector has shape {eta.shape}, expected ({len(wg.vertices)},)")
    rows, cols, w, b = wg._arrays
    out = b * eta
    np.add.at(out, rows, w * eta[cols])
    np.add.at(out, cols, w * eta[rows])
    return out


def jacobi_matrix(wg: WeightedDiscreteGraph) -> np.ndarray:
    """Dense symmetric Jacobi matrix in ``wg.vertices`` order."""
    rows, cols, w, b = wg._arrays
    A = np.diag(b)
    np.add.at(A, (rows, cols), w)
    np.add.at(A, (cols, rows), w)
    return A


# ---------------------------------------------------------------------------
# derived graph

@dataclass(frozen=True, eq=False)
class DerivedGraph:
    """Derived graph with maps from base vertices and edge ends to its vertices."""

    wgraph: WeightedDiscreteGraph
    principal: dict
    shadow: dict
    lam: float


def derive(g: QuantumGraph, lam: float) -> DerivedGraph:
    """Derived graph of ``g`` at ``lam``.

    For an edge ``e = (u, v)`` with transfer data ``f, f', g, g'`` at its
    length, the weights are

    ============================  ========
    pair                          weight
    ============================  ========
    ``(u_p, v_p)``                ``f'``
    ``(u_p, v_e)``                ``f``
    ``(u_e, v_e)``                ``g``
    ``(u_e, v_p)``                ``g'``
    ``(u_p, u_e)``, ``(v_p, v_e)``  ``-1``
    ============================  ========

    where ``u_e``, ``v_e`` are the shadows of ``e``'s ends.  Principal
    vertices exist only for finite ``alpha`` and carry ``b = 2 alpha``.
    These pairs are the same whichever way ``e`` is oriented.
    """
    if any(e.is_loop for e in g.edges):
        raise ValidationError("the derived graph needs a loop-free graph; normalize first")
    principal = {v: principal_id(v) for v in g.vertices if g.alpha[v] < INF}
    shadow = {}
    for e in g.edges:
        shadow[(e.tail, e.id)] = shadow_id(e.tail, e.id)
        shadow[(e.head, e.id)] = shadow_id(e.head, e.id)
    b = {pv: 2.0 * g.alpha[v] for v, pv in principal.items()}
    b.update({s: 0.0 for s in shadow.values()})
    edges, a = [], {}

    def add(name, x, y, w):
        edges.append((name, x, y))
        a[name] = float(w)

    for e in g.edges:
        t = transfer(e, lam)
        u, v = e.tail, e.head
        ue, ve = shadow[(u, e.id)], shadow[(v, e.id)]
        up, vp = principal.get(u), principal.get(v)
        if up is not None and vp is not None:
            add(f"{e.id}:pp", up, vp, t.dfL)
        if up is not None:
            add(f"{e.id}:ps", up, ve, t.fL)
            add(f"{e.id}:tail", up, ue, -1.0)
        if vp is not None:
            add(f"{e.id}:sp", ue, vp, t.dgL)
            add(f"{e.id}:head", vp, ve, -1.0)
        add(f"{e.id}:ss", ue, ve, t.gL)
    dg = DiscreteGraph(tuple(b), tuple(edges))
    return DerivedGraph(WeightedDiscreteGraph(dg, a, b), principal, shadow, float(lam))


def gamma_map(g: QuantumGraph, pair: Eigenpair, k: int = 0, dg: DerivedGraph | None = None,
              check: float = 1e-8) -> np.ndarray:
    """Vector on the derived graph built from eigenfunction ``k`` of ``pair``.

    Principal vertices get the vertex value, shadows the outgoing derivative
    along their edge.  The result lies in the kernel of the derived Jacobi
    matrix.

    Raises
    ------
    ValidationError
        The eigenfunction is zero.
    qtree.errors.NumericError
        The vertex values of the eigenfunction disagree beyond ``check``.
    """
    if dg is None:
        dg = derive(g, pair.lam)
    trace = eigenfunction_vertex_trace(g, pair, k, check=check)
    vec = dict.fromkeys(dg.wgraph.vertices, 0.0)
    for v, (val, ders) in trace.items():
        if v in dg.principal:
            vec[dg.principal[v]] = val
        for eid, d in ders:
            vec[dg.shadow[(v, eid)]] = d
    out = np.array([vec[v] for v in dg.wgraph.vertices])
    if not np.any(out):
        raise ValidationError("zero eigenfunction")
    return out


# ---------------------------------------------------------------------------
# bipartite companion

@dataclass(frozen=True, eq=False)
class BipartiteCompanion:
    """Representative vertices ``T0, T1, ...`` joined to boundary vertices.

    Attributes
    ----------
    wgraph : WeightedDiscreteGraph
        ``b`` is zero everywhere; one edge per attachment, so parallel edges
        occur when a piece meets a boundary vertex several times.
    representatives : tuple of str
        One per piece, in the order of ``report.maximizer.components``.
    boundary : tuple of str
        Finite boundary vertices, sorted.
    """

    wgraph: WeightedDiscreteGraph
    representatives: tuple
    boundary: tuple


def companion(g: QuantumGraph, report: AomotoReport) -> BipartiteCompanion:
    """Bipartite companion of an atom.

    The edge from piece ``i`` to boundary vertex ``v`` along base edge ``e``
    has weight equal to the outgoing derivative at ``v`` (into ``e``) of the
    L2-normalized eigenfunction of piece ``i``.
    """
    lam = report.lam
    bnd = tuple(sorted(report.maximizer.finite_boundary))
    reps = tuple(f"T{i}" for i in range(len(report.maximizer.components)))
    if set(reps) & set(bnd):
        reps = tuple(f"T{i}@" for i in range(len(reps)))
    edges, a = [], {}
    for rep, comp in zip(reps, report.maximizer.components):
        pair, trace = component_eigenfunction(g, comp, lam)
        for eid in sorted(comp.eset):
            e = g.edge[eid]
            for v in (e.tail, e.head):
                if v in comp.vset or v not in report.maximizer.finite_boundary:
                    continue
                leaf = f"{v}|{eid}"
                (_, d), = trace[leaf][1]
                name = f"{rep}-{v}-{eid}"
                edges.append((name, rep, v))
                a[name] = float(d)
    b = dict.fromkeys(reps + bnd, 0.0)
    return BipartiteCompanion(WeightedDiscreteGraph(DiscreteGraph(reps + bnd, tuple(edges)), a, b),
                              reps, bnd)


def coupling_matrix(comp: BipartiteCompanion) -> np.ndarray:
    """``|boundary| x |representatives|`` matrix of summed attachment weights."""
    M = np.zeros((len(comp.boundary), len(comp.representatives)))
    ri = {r: j for j, r in enumerate(comp.representatives)}
    bi = {v: i for i, v in enumerate(comp.boundary)}
    for e, t, h in comp.wgraph.graph.edges:
        M[bi[h], ri[t]] += comp.wgraph.a[e]
    return M


def index_identity_check(g: QuantumGraph, report: AomotoReport, rtol: float = 1e-8):
    """Whether the coupling matrix has nullity at least the atom's index.

    Returns
    -------
    ok : bool
    nullity : int
        Numerical nullity (singular values below ``rtol`` times the largest,
        plus the excess of columns over rows).
    """
    M = coupling_matrix(companion(g, report))
    ncols = M.shape[1]
    if M.shape[0] == 0:
        nullity = ncols
    else:
        sv = np.linalg.svd(M, compute_uv=False)
        if sv.size == 0 or sv[0] == 0:
            nullity = ncols
        else:
            nullity = ncols - int(np.sum(sv >= rtol * sv[0]))
    return nullity >= report.index, nullity
