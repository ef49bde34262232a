"""Point spectrum and density-of-states atoms of the universal cover.

An eligible set ``X = (S, E_S + D)`` at ``lam`` is built from

* a vertex set ``S`` inducing a forest, with all edges at ``S``;
* extra edges ``D`` whose endpoints are outside ``S`` and for which
  ``g_e(L) = 0`` at ``lam`` (``lam`` is a Dirichlet eigenvalue of the edge).

Its connected pieces (edges joined only at vertices of ``S``) must each
carry ``lam`` as an eigenvalue with Dirichlet conditions on the vertices
where they attach to the rest of the graph.  The index is the number of
pieces minus the number of finite-``alpha`` attachment vertices.  The atom
of the density of states at ``lam`` is the largest index over eligible sets
divided by the total length; ``lam`` is an eigenvalue of the tree exactly
when that maximum is positive.

Candidates ``lam`` therefore come from two finite lists: Dirichlet
eigenvalues of single edges, and eigenvalues of induced subtrees with
Dirichlet conditions where they attach.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .compact import (NULLITY_RTOL, _pair_at, eigenfunction_vertex_trace, eigenvalues_in_window,
                      merge_tol, secular)
from .errors import CapError, ValidationError
from .graph import (INF, Edge, QuantumGraph, SubsetX, boundary, components_of_subset,
                    induced_acyclic, pure_cycles, unfold)
from .transfer import edge_dirichlet_eigenvalues, gram, transfer

__all__ = [
    "EligibleSet", "AomotoReport", "OracleVerdict", "component_graph", "certify",
    "component_eigenfunction", "is_support_tight",
    "induced_subtrees", "second_type_edges", "candidate_lambdas", "eligible_sets",
    "best_index", "point_spectrum", "truncation_oracle", "regular_filter_check",
    "pure_cycle_boundary_check", "VERTEX_CAP",
]

log = logging.getLogger(__name__)

VERTEX_CAP = 16
EDGE_ZERO_TOL = 1e-9


# ---------------------------------------------------------------------------
# data types

@dataclass(frozen=True, eq=False)
class EligibleSet:
    """A set satisfying the four eligibility conditions at some ``lam``."""

    x: SubsetX
    components: tuple
    finite_boundary: frozenset
    dirichlet_boundary: frozenset
    certificates: tuple = ()

    @property
    def cc(self):
        return len(self.components)

    @property
    def index(self):
        return self.cc - len(self.finite_boundary)

    def to_json(self):
        return {
            "components": [c.to_json() for c in self.components],
            "boundary": sorted(self.finite_boundary),
            "dirichlet_boundary": sorted(self.dirichlet_boundary),
            "index": self.index,
        }


@dataclass(frozen=True, eq=False)
class AomotoReport:
    """Atom of the density of states at ``lam`` with its maximizing set.

    Attributes
    ----------
    lam : float
    maximizer : EligibleSet
    index : int
    atom_mass : float
        ``index / total length``.
    certificates : tuple of (nullity, residual)
        One per component: numerical nullity and smallest relative singular
        value of the component's secular matrix at ``lam``.
    """

    lam: float
    maximizer: EligibleSet
    index: int
    atom_mass: float
    certificates: tuple = ()

    def to_json(self):
        m = self.maximizer
        return {
            "lambda": self.lam,
            "index": self.index,
            "mass": self.atom_mass,
            "components": [c.to_json() for c in m.components],
            "boundary": sorted(m.finite_boundary),
            "dirichlet_boundary": sorted(m.dirichlet_boundary),
        }


# ---------------------------------------------------------------------------
# components as stand-alone graphs

def component_graph(g: QuantumGraph, comp: SubsetX) -> QuantumGraph:
    """The piece ``comp`` as a quantum graph.

    Vertices of ``comp.vset`` keep their ``alpha``.  Every edge end at a
    vertex outside ``comp.vset`` gets its own Dirichlet vertex, named
    ``"<vertex>|<edge>"``.
    """
    alpha = {v: g.alpha[v] for v in comp.vset}
    edges = []
    for eid in sorted(comp.eset):
        e = g.edge[eid]
        tail = e.tail if e.tail in comp.vset else f"{e.tail}|{eid}"
        head = e.head if e.head in comp.vset else f"{e.head}|{eid}"
        for v in (tail, head):
            alpha.setdefault(v, INF)
        edges.append(Edge(eid, tail, head, e.length, e.potential))
    return QuantumGraph(alpha, edges)


def certify(g: QuantumGraph, comp: SubsetX, lam: float, rtol: float = NULLITY_RTOL):
    """Numerical nullity and smallest relative singular value of a piece at ``lam``."""
    cg = component_graph(g, comp)
    sv = np.linalg.svd(secular(cg, lam).matrix, compute_uv=False)
    return int(np.sum(sv < rtol * sv[0])), float(sv[-1] / sv[0])


def component_eigenfunction(g: QuantumGraph, comp: SubsetX, lam: float):
    """L2-normalized eigenfunction of a piece at ``lam`` (Dirichlet where it attaches).

    Returns
    -------
    pair : Eigenpair
        On the stand-alone graph of :func:`component_graph`, multiplicity 1.
    trace : dict
        Vertex values and outgoing derivatives, keyed by vertex of that graph.
    """
    cg = component_graph(g, comp)
    pair = _pair_at(cg, lam, 1)
    return pair, eigenfunction_vertex_trace(cg, pair, check=None)


def is_support_tight(g: QuantumGraph, comp: SubsetX, lam: float, rtol: float = 1e-7) -> bool:
    """Whether the piece's eigenfunction is simple and nonzero on every edge and vertex of ``comp``.

    Pieces of the support of a tree eigenfunction have this property.  A
    certified piece can fail it when its eigenfunction vanishes on part of
    the piece, which happens when a smaller piece carries ``lam`` as well.
    """
    n, _ = certify(g, comp, lam)
    if n != 1:
        return False
    pair, trace = component_eigenfunction(g, comp, lam)
    c = pair.coeffs[0]
    cg_edges = component_graph(g, comp).edges
    masses = np.array([c[j] @ gram(e, lam) @ c[j] for j, e in enumerate(cg_edges)])
    if np.any(masses < rtol ** 2 * masses.sum()):
        return False
    s = math.sqrt(max(1.0, abs(lam)))
    scale = max(max(abs(val), *(abs(d) / s for _, d in ders)) for val, ders in trace.values())
    return all(abs(trace[v][0]) > rtol * scale for v in comp.vset)


def _check_size(g, cap):
    if len(g.vertices) > cap:
        raise CapError(f"graph has {len(g.vertices)} vertices, above the cap of {cap}")
    if not g.graph.is_simple():
        raise ValidationError("the atom engine needs a normalized graph")


def induced_subtrees(g: QuantumGraph, cap: int = VERTEX_CAP) -> list:
    """All nonempty connected vertex sets inducing a tree, in a fixed order."""
    _check_size(g, cap)
    vs = list(g.vertices)
    idx = {v: i for i, v in enumerate(vs)}
    nbr = [0] * len(vs)
    for e in g.edges:
        a, b = idx[e.tail], idx[e.head]
        nbr[a] |= 1 << b
        nbr[b] |= 1 << a
    out = []
    seen = set()
    # grow connected sets from each vertex, only adding vertices with one neighbour inside
    frontier = [1 << i for i in range(len(vs)) if g.degree(vs[i]) > 0]
    seen.update(frontier)
    while frontier:
        new = []
        for mask in frontier:
            out.append(mask)
            grow = 0
            for i in range(len(vs)):
                if mask >> i & 1:
                    grow |= nbr[i]
            grow &= ~mask
            for j in range(len(vs)):
                if grow >> j & 1 and bin(nbr[j] & mask).count("1") == 1:
                    m2 = mask | 1 << j
                    if m2 not in seen:
                        seen.add(m2)
                        new.append(m2)
        frontier = new
    sets = [frozenset(vs[i] for i in range(len(vs)) if m >> i & 1) for m in out]
    sets.sort(key=lambda s: (len(s), sorted(s)))
    return sets


def _closure(g, s) -> SubsetX:
    return SubsetX(s, {eid for v in s for eid, _ in g.incidence[v]})


def _as_fraction(x):
    f = Fraction(x).limit_denominator(10 ** 6)
    if abs(float(f) - x) > 1e-12 * max(1.0, abs(x)):
        raise ValidationError(f"length {x!r} is not a rational number with denominator <= 1e6")
    return f


def second_type_edges(g: QuantumGraph, lam: float, exact_q: Fraction | None = None) -> list:
    """Edges with ``lam`` in their Dirichlet spectrum.

    With ``exact_q`` (exact mode, zero potential, rational lengths) the test
    is ``exact_q * length`` being an integer, where ``lam = (pi * exact_q)**2``.
    """
    out = []
    for e in g.edges:
        if exact_q is not None:
            if (exact_q * _as_fraction(e.length)).denominator == 1:
                out.append(e.id)
            continue
        t = transfer(e, lam)
        if abs(t.gL) < EDGE_ZERO_TOL * max(1.0, abs(t.dgL)):
            out.append(e.id)
    return out


# ---------------------------------------------------------------------------
# engine with caches

class _Engine:
    def __init__(self, g, cap=VERTEX_CAP, rtol=NULLITY_RTOL):
        _check_size(g, cap)
        self.g = g
        self.rtol = rtol
        self.subtrees = induced_subtrees(g, cap)
        self.closures = [_closure(g, s) for s in self.subtrees]
        self.spectra = None
        self._cert = {}

    def load_spectra(self, window, tol):
        a, b = window
        pad = 1e-6 * max(1.0, abs(b))
        self.spectra = [np.array([p.lam for p in eigenvalues_in_window(
            component_graph(self.g, c), (a - pad, b + pad), tol, basis=False)]) for c in self.closures]

    def certify(self, i, lam):
        key = (i, lam)
        if key not in self._cert:
            if self.spectra is not None:
                sp = self.spectra[i]
                if sp.size == 0 or np.min(np.abs(sp - lam)) > 100 * merge_tol(lam):
                    self._cert[key] = (0, 1.0)
                    return self._cert[key]
            self._cert[key] = certify(self.g, self.closures[i], lam, self.rtol)
        return self._cert[key]

    def tight(self, i, lam):
        key = (i, lam, "tight")
        if key not in self._cert:
            self._cert[key] = is_support_tight(self.g, self.closures[i], lam)
        return self._cert[key]

    def certified_subtrees(self, lam):
        return [i for i in range(len(self.subtrees)) if self.certify(i, lam)[0] >= 1]

    def packings(self, cert, limit=10 ** 6):
        """Collections of certified subtrees that are pairwise disjoint and non-adjacent."""
        g = self.g
        near = []
        for i in cert:
            s = self.subtrees[i]
            nb = set(s)
            for v in s:
                nb.update(g.edge[eid].other(v) for eid, _ in g.incidence[v])
            near.append(nb)
        out = [()]
        count = [0]

        def rec(start, chosen, used):
            for k in range(start, len(cert)):
                s = self.subtrees[cert[k]]
                if s & used:
                    continue
                combo = chosen + (cert[k],)
                count[0] += 1
                if count[0] > limit:
                    raise CapError("too many combinations of certified subtrees")
                out.append(combo)
                rec(k + 1, combo, used | near[k])

        rec(0, (), frozenset())
        return out


def _assemble(g, eng, combo, dset, lam):
    s = frozenset().union(*[eng.subtrees[i] for i in combo]) if combo else frozenset()
    es = set()
    for i in combo:
        es |= eng.closures[i].eset
    es |= set(dset)
    x = SubsetX(s, es)
    comps = tuple(sorted((eng.closures[i] for i in combo), key=lambda c: sorted(c.eset)))
    comps = comps + tuple(SubsetX(frozenset(), {d}) for d in sorted(dset))
    comps = tuple(sorted(comps, key=lambda c: (sorted(c.vset), sorted(c.eset))))
    fb, db = boundary(g, x)
    es = EligibleSet(x, comps, fb, db)
    tight = es.index > 0 and all(eng.tight(i, lam) for i in combo)
    return es, tight


def _rank_key(es: EligibleSet, tight: bool):
    # index first; among equal indices prefer sets whose pieces are supports
    return (es.index, tight, len(es.x.eset), -len(es.x.vset),
            tuple(sorted(es.x.vset)), tuple(sorted(es.x.eset)))


def eligible_sets(g: QuantumGraph, lam: float, tol: float = NULLITY_RTOL, cap: int = VERTEX_CAP,
                  max_sets: int = 2 ** 22, exact_q: Fraction | None = None, _engine=None) -> list:
    """Every eligible set at ``lam`` (positive index), best first.

    Raises
    ------
    CapError
        More than ``max_sets`` combinations would have to be examined.
    """
    eng = _engine or _Engine(g, cap, tol)
    cert = eng.certified_subtrees(lam)
    dcand = second_type_edges(g, lam, exact_q)
    out = []
    examined = 0
    for combo in eng.packings(cert):
        s = frozenset().union(*[eng.subtrees[i] for i in combo]) if combo else frozenset()
        allowed = [d for d in dcand if g.edge[d].tail not in s and g.edge[d].head not in s]
        examined += 2 ** len(allowed)
        if examined > max_sets:
            raise CapError(f"more than {max_sets} candidate sets at lam={lam}")
        for r in range(len(allowed) + 1):
            for dset in itertools.combinations(allowed, r):
                if not combo and not dset:
                    continue
                es, tight = _assemble(g, eng, combo, dset, lam)
                if es.index > 0:
                    out.append((_rank_key(es, tight), es))
    out.sort(key=lambda t: t[0], reverse=True)
    return [es for _, es in out]


def _best_dset(g, s, boundary_s, allowed):
    """Choose extra edges maximizing (#edges added) - (#new finite boundary vertices)."""
    relevant = sorted({v for d in allowed for v in (g.edge[d].tail, g.edge[d].head)
                       if g.alpha[v] < INF and v not in boundary_s})
    if len(relevant) > 20:
        raise CapError("too many vertices touched by zero-Dirichlet edges")
    pos = {v: i for i, v in enumerate(relevant)}
    masks = np.array([sum(1 << pos[v] for v in {g.edge[d].tail, g.edge[d].head} if v in pos)
                      for d in allowed], dtype=np.int64)
    us = np.arange(1 << len(relevant), dtype=np.int64)
    if masks.size:
        inside = (masks[None, :] & ~us[:, None]) == 0
        gain = inside.sum(axis=1)
    else:
        inside = np.zeros((us.size, 0), dtype=bool)
        gain = np.zeros(us.size, dtype=int)
    pop = np.array([bin(u).count("1") for u in us])
    score = gain - pop
    # ties: more edges, then fewer vertices
    best = np.lexsort((pop, -gain, -score))[0]
    chosen = [d for d, ok in zip(allowed, inside[best]) if ok]
    return chosen


def best_index(g: QuantumGraph, lam: float, tol: float = NULLITY_RTOL, cap: int = VERTEX_CAP,
               exact_q: Fraction | None = None, _engine=None,
               _dcand=None) -> AomotoReport | None:
    """Maximal index over eligible sets at ``lam``; ``None`` when no set has positive index."""
    eng = _engine or _Engine(g, cap, tol)
    cert = eng.certified_subtrees(lam)
    dcand = second_type_edges(g, lam, exact_q) if _dcand is None else _dcand
    if not cert and not dcand:
        return None
    best, best_key = None, None
    for combo in eng.packings(cert):
        s = frozenset().union(*[eng.subtrees[i] for i in combo]) if combo else frozenset()
        es_s = set()
        for i in combo:
            es_s |= eng.closures[i].eset
        bs, _ = boundary(g, SubsetX(s, es_s))
        allowed = [d for d in dcand if g.edge[d].tail not in s and g.edge[d].head not in s]
        dset = _best_dset(g, s, bs, allowed)
        if not combo and not dset:
            continue
        cand, tight = _assemble(g, eng, combo, dset, lam)
        key = _rank_key(cand, tight)
        if best is None or key > best_key:
            best, best_key = cand, key
    if best is None or best.index <= 0:
        return None
    certs = []
    for comp in best.components:
        n, r = certify(g, comp, lam, tol)
        if n != 1:
            log.warning("lam=%.12g: component %s has nullity %d", lam, sorted(comp.eset), n)
        certs.append((n, r))
    best = EligibleSet(best.x, best.components, best.finite_boundary, best.dirichlet_boundary,
                       tuple(certs))
    return AomotoReport(float(lam), best, best.index, best.index / g.total_length, tuple(certs))


# ---------------------------------------------------------------------------
# windowed point spectrum

def _dedup(values):
    values = sorted(values)
    groups = []
    for v in values:
        if groups and abs(v - groups[-1][0]) <= merge_tol(groups[-1][0]):
            groups[-1].append(v)
        else:
            groups.append([v])
    return [float(np.median(gr)) for gr in groups]


def candidate_lambdas(g: QuantumGraph, window, cap: int = VERTEX_CAP, tol: float = 1e-8,
                      _engine=None) -> list:
    """Sorted, deduplicated candidate eigenvalues of the tree inside ``(a, b]``."""
    a, b = map(float, window)
    if not a < b:
        raise ValidationError("window must satisfy a < b")
    eng = _engine or _Engine(g, cap)
    if eng.spectra is None:
        eng.load_spectra((a, b), tol)
    vals = []
    for e in g.edges:
        vals.extend(edge_dirichlet_eigenvalues(e, (a, b)))
    for sp in eng.spectra:
        vals.extend(sp[(sp > a) & (sp <= b)])
    return [v for v in _dedup(vals) if a + merge_tol(a) < v <= b + merge_tol(b)]


def _exact_candidates(g, window):
    """Edge Dirichlet eigenvalues as exact ``q`` with ``lam = (pi q)**2``."""
    if not g.has_zero_potential():
        raise ValidationError("exact mode needs zero potential on every edge")
    a, b = window
    out = {}
    for e in g.edges:
        L = _as_fraction(e.length)
        n = 1
        while True:
            q = Fraction(n) / L
            lam = float(q * q) * math.pi ** 2
            if lam > b + merge_tol(b):
                break
            if lam > a:
                out[q] = lam
            n += 1
    return out


def point_spectrum(g: QuantumGraph, window, tol: float = NULLITY_RTOL, cap: int = VERTEX_CAP,
                   exact: bool = False) -> list:
    """Atoms of the density of states inside ``(a, b]``.

    Parameters
    ----------
    g : QuantumGraph
        Normalized, with at most ``cap`` vertices.
    window : (float, float)
    tol : float
        Relative singular-value threshold for certifying pieces.
    exact : bool
        Zero potential and rational lengths only: decide which edges have
        ``lam`` in their Dirichlet spectrum by exact rational arithmetic.

    Returns
    -------
    list of AomotoReport
        Sorted by ``lam``; each has positive index.
    """
    eng = _Engine(g, cap, tol)
    cands = candidate_lambdas(g, window, cap, _engine=eng)
    exact_map = _exact_candidates(g, window) if exact else {}
    reports = []
    for lam in cands:
        dcand = None
        if exact:
            close = [k for k, v in exact_map.items() if abs(v - lam) <= merge_tol(lam)]
            dcand = second_type_edges(g, lam, close[0]) if close else []
        rep = best_index(g, lam, tol, cap, _engine=eng, _dcand=dcand)
        if rep is not None:
            reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# checks

@dataclass(frozen=True)
class OracleVerdict:
    """Outcome of the truncation oracle.

    Attributes
    ----------
    confirmed : bool
    root : str or None
        Base vertex used as the centre of the ball that gave the verdict.
    nullity : int
        Multiplicity of ``lam`` in that ball.
    frontier_fraction : float
        Smallest share of L2 mass on edges at cut vertices, over the
        eigenspace of the ball.
    decay : tuple of float
        The same share at increasing depths when the decay test ran.
    """

    confirmed: bool
    root: str | None
    nullity: int
    frontier_fraction: float
    decay: tuple = field(default=())


@lru_cache(maxsize=4096)
def _edge_gram(length, potential, lam):
    return gram(Edge("_", "_a", "_b", length, potential), lam)


def _frontier_fraction(tt, lam, rtol):
    """Nullity of the ball at ``lam`` and the least frontier share of mass in its eigenspace."""
    tree = tt.tree
    sm = secular(tree, lam)
    _, sv, vt = np.linalg.svd(sm.matrix)
    k = int(np.sum(sv < rtol * sv[0]))
    if k == 0:
        return 0, 1.0
    vecs = vt[-k:].reshape(k, -1, 2).copy()
    vecs[:, :, 1] *= sm.scale
    tot = np.zeros((k, k))
    fr = np.zeros((k, k))
    for j, e in enumerate(tree.edges):
        c = vecs[:, j, :]
        m = c @ _edge_gram(e.length, e.potential, lam) @ c.T
        tot += m
        if e.tail in tt.frontier or e.head in tt.frontier:
            fr += m
    w, u = np.linalg.eigh(tot)
    keep = w > 1e-14 * w[-1]
    t = u[:, keep] / np.sqrt(w[keep])
    share = np.linalg.eigvalsh(t.T @ fr @ t)
    return k, float(max(share[0], 0.0))


def truncation_oracle(g: QuantumGraph, lam: float, depth: int = 3, tol: float = 1e-6,
                      report: AomotoReport | None = None, roots=None,
                      decay_ratio: float = 0.5, max_vertices: int = 4000) -> OracleVerdict:
    """Independent check of an atom on finite balls of the universal cover.

    The cover is unfolded to ``depth`` around a vertex, cut vertices get
    Dirichlet conditions, and the eigenspace of ``lam`` on the ball is
    searched for the function with the smallest share of L2 mass on edges
    at cut vertices.

    * A share below ``tol`` is a compactly supported eigenfunction of the
      tree: confirmed.
    * Otherwise the share is recomputed at ``depth + 1`` and ``depth + 2``;
      if it shrinks geometrically (each ratio at most ``decay_ratio``) the
      ball sees an L2-decaying eigenfunction: confirmed.  Extended
      solutions only lose their share like ``1/depth``.

    Parameters
    ----------
    roots : iterable of str, optional
        Base vertices to centre the balls on.  Defaults to the vertices of
        the maximizing set in ``report`` (or of ``best_index``), otherwise
        all vertices.
    """
    if depth < 3:
        raise ValidationError("the truncation oracle needs depth >= 3")
    if roots is None:
        rep = report if report is not None else best_index(g, lam)
        if rep is not None:
            x = rep.maximizer.x
            touched = set(x.vset) | set(rep.maximizer.finite_boundary)
            for eid in x.eset:
                touched.update((g.edge[eid].tail, g.edge[eid].head))
            roots = sorted(touched)
        else:
            roots = list(g.vertices)
    best = OracleVerdict(False, None, 0, 1.0)
    for r in roots:
        tt = unfold(g, r, depth, max_vertices=max_vertices)
        k, share = _frontier_fraction(tt, lam, NULLITY_RTOL)
        if k and share < tol:
            return OracleVerdict(True, r, k, share)
        if k and share < best.frontier_fraction:
            best = OracleVerdict(False, r, k, share)
    if best.root is None:
        return best
    shares = [best.frontier_fraction]
    for d in (depth + 1, depth + 2):
        try:
            tt = unfold(g, best.root, d, max_vertices=max_vertices)
        except CapError:
            break
        k, share = _frontier_fraction(tt, lam, NULLITY_RTOL)
        shares.append(share if k else 1.0)
    ratios = [b / a for a, b in zip(shares, shares[1:]) if a > 0]
    decays = len(ratios) == 2 and all(q <= decay_ratio for q in ratios)
    return OracleVerdict(decays, best.root, best.nullity, best.frontier_fraction, tuple(shares))


def regular_filter_check(g: QuantumGraph, reports) -> bool | None:
    """For a regular graph with finite ``alpha`` everywhere: every atom is an edge Dirichlet eigenvalue.

    Returns ``None`` when the graph is not regular or has a Dirichlet vertex.
    """
    degs = {g.degree(v) for v in g.vertices}
    if len(degs) != 1 or any(a == INF for a in g.alpha.values()):
        return None
    for rep in reports:
        lam = rep.lam
        hit = any(np.any(np.abs(edge_dirichlet_eigenvalues(
            e, (lam - 1e-6 * max(1, abs(lam)), lam + 1e-6 * max(1, abs(lam)))) - lam)
            <= 1e-8 * max(1.0, abs(lam))) for e in g.edges)
        if not hit:
            return False
    return True


def pure_cycle_boundary_check(g: QuantumGraph, report: AomotoReport) -> bool:
    """Every pure cycle meeting the maximizer, with finite ``alpha``, has its attachment in the boundary."""
    x = report.maximizer.x
    for edges, u in pure_cycles(g):
        if u is None:
            continue
        cyc_vertices = {w for eid in edges for w in (g.edge[eid].tail, g.edge[eid].head)}
        if any(g.alpha[w] == INF for w in cyc_vertices):
            continue
        if not (set(edges) & x.eset or cyc_vertices & x.vset):
            continue
        if u not in report.maximizer.finite_boundary:
            return False
    return True
