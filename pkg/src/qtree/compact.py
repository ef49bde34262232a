"""Spectrum of a compact quantum graph.

Two matrices drive the solver.

* The secular matrix (:func:`secular`) has one column pair ``(a_e, b_e)``
  per edge (value and derivative at the tail) and one row per vertex
  condition.  Its null space is the eigenspace.
* The vertex Dirichlet-to-Neumann matrix ``Lambda(lam)`` maps vertex
  values to the defect ``sum of outgoing derivatives - alpha f(v)`` of the
  edgewise solution.  Away from edge Dirichlet eigenvalues,

      #{eigenvalues < lam} = #{edge Dirichlet eigenvalues < lam}
                             + #{positive eigenvalues of Lambda(lam)},

  which gives an exact counting function.  Bisection on the count isolates
  every eigenvalue cluster with its multiplicity; the secular matrix then
  pins the location and supplies an orthonormal eigenbasis.
"""
from __future__ import annotations

import logging
import math
import weakref
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import IncompleteScanError, NumericError, ValidationError
from .graph import INF, QuantumGraph
from .transfer import SERIES_CUTOFF, EdgeSolution, dirichlet_count, gram, transfer

__all__ = [
    "NULLITY_RTOL", "SecularMatrix", "Eigenpair", "secular", "nullity",
    "count_below", "multiplicity_at", "eigenvalues_in_window", "lowest_eigenvalues",
    "counting_measure", "eigenfunction_vertex_trace", "expand", "merge_tol",
]

log = logging.getLogger(__name__)

NULLITY_RTOL = 1e-8
POLE_GUARD = 1e-9


def merge_tol(lam):
    """Two eigenvalues closer than this are treated as one."""
    return 1e-8 * max(1.0, abs(lam))


# ---------------------------------------------------------------------------
# per-graph tables

class _Tables:
    """Edge data in array form for fast repeated evaluation."""

    def __init__(self, g: QuantumGraph):
        self.g = g
        self.eids = [e.id for e in g.edges]
        vpos = {v: i for i, v in enumerate(g.interior)}
        self.nint = len(vpos)
        self.tail = np.array([vpos.get(e.tail, -1) for e in g.edges], dtype=int)
        self.head = np.array([vpos.get(e.head, -1) for e in g.edges], dtype=int)
        self.length = np.array([e.length for e in g.edges])
        consts = [e.potential.constant_value() for e in g.edges]
        self.is_const = np.array([c is not None for c in consts], dtype=bool)
        self.c = np.array([0.0 if c is None else c for c in consts])
        self.generic = [i for i, c in enumerate(consts) if c is None]
        self.alpha = np.array([g.alpha[v] for v in g.interior])

    @cached_property
    def layout(self):
        return _secular_layout(self.g)

    def transfer_arrays(self, lam):
        """``f(L), g(L), f'(L), g'(L)`` of every edge at ``lam``."""
        n = len(self.eids)
        fL, gL, dfL, dgL = np.empty(n), np.empty(n), np.empty(n), np.empty(n)
        if self.is_const.any():
            m = self.is_const
            z = lam - self.c[m]
            L = self.length[m]
            a, b, c, d = np.empty(z.size), np.empty(z.size), np.empty(z.size), np.empty(z.size)
            pos = z > SERIES_CUTOFF
            neg = z < -SERIES_CUTOFF
            mid = ~(pos | neg)
            if pos.any():
                k = np.sqrt(z[pos])
                sn, co = np.sin(k * L[pos]), np.cos(k * L[pos])
                a[pos], b[pos], c[pos], d[pos] = co, sn / k, -k * sn, co
            if neg.any():
                k = np.sqrt(-z[neg])
                sh, ch = np.sinh(k * L[neg]), np.cosh(k * L[neg])
                a[neg], b[neg], c[neg], d[neg] = ch, sh / k, k * sh, ch
            if mid.any():
                zm, Lm = z[mid], L[mid]
                zx2 = zm * Lm * Lm
                a[mid], b[mid] = 1 - zx2 / 2, Lm * (1 - zx2 / 6)
                c[mid], d[mid] = -zm * Lm * (1 - zx2 / 6), 1 - zx2 / 2
            fL[m], gL[m], dfL[m], dgL[m] = a, b, c, d
        for i in self.generic:
            t = transfer(self.g.edges[i], lam)
            fL[i], gL[i], dfL[i], dgL[i] = t.fL, t.gL, t.dfL, t.dgL
        return fL, gL, dfL, dgL

    def dtn_parts(self, lam):
        """Diagonal tail/head terms and off-diagonal term of each edge, plus minimal |g|·scale."""
        n = len(self.eids)
        dt, dh, off = np.empty(n), np.empty(n), np.empty(n)
        guard = np.full(n, np.inf)
        if self.is_const.any():
            m = self.is_const
            z = lam - self.c[m]
            L = self.length[m]
            a, b = np.empty(z.size), np.empty(z.size)
            gd = np.empty(z.size)
            pos = z > 1e-12
            neg = z < -1e-12
            mid = ~(pos | neg)
            if pos.any():
                k = np.sqrt(z[pos])
                s, co = np.sin(k * L[pos]), np.cos(k * L[pos])
                with np.errstate(divide="ignore"):
                    a[pos] = -k * co / s
                    b[pos] = k / s
                gd[pos] = np.abs(s)
            if neg.any():
                k = np.sqrt(-z[neg])
                x = k * L[neg]
                a[neg] = -k / np.tanh(x)
                with np.errstate(over="ignore"):
                    b[neg] = k / np.sinh(x)
                gd[neg] = np.inf
            if mid.any():
                a[mid] = -1.0 / L[mid]
                b[mid] = 1.0 / L[mid]
                gd[mid] = np.inf
            dt[m], dh[m], off[m] = a, a, b
            guard[m] = gd
        for i in self.generic:
            ts = transfer(self.g.edges[i], lam)
            s = math.sqrt(max(1.0, abs(lam)))
            guard[i] = abs(ts.gL) * s
            dt[i] = -ts.fL / ts.gL if ts.gL != 0 else -np.inf
            dh[i] = -ts.dgL / ts.gL if ts.gL != 0 else -np.inf
            off[i] = 1.0 / ts.gL if ts.gL != 0 else np.inf
        return dt, dh, off, guard

    def dtn(self, lam):
        dt, dh, off, guard = self.dtn_parts(lam)
        n = self.nint
        A = np.zeros((n, n))
        t, h = self.tail, self.head
        mt, mh = t >= 0, h >= 0
        both = mt & mh
        np.add.at(A, (t[mt], t[mt]), dt[mt])
        np.add.at(A, (h[mh], h[mh]), dh[mh])
        np.add.at(A, (t[both], h[both]), off[both])
        np.add.at(A, (h[both], t[both]), off[both])
        A[np.diag_indices(n)] -= self.alpha
        return A, guard

    def dirichlet_total(self, lam):
        total = 0
        if self.is_const.any():
            z = lam - self.c[self.is_const]
            kl = np.sqrt(np.maximum(z, 0.0)) * self.length[self.is_const] / math.pi
            total += int(np.sum(np.maximum(np.ceil(kl - 1e-13) - 1, 0)))
        for i in self.generic:
            total += dirichlet_count(self.g.edges[i], lam)
        return total


_TABLES = weakref.WeakKeyDictionary()


def _tables(g):
    t = _TABLES.get(g)
    if t is None:
        t = _TABLES[g] = _Tables(g)
    return t


def _count_at(g, lam):
    """Return (count, safe) at ``lam``."""
    tb = _tables(g)
    nd = tb.dirichlet_total(lam)
    if tb.nint == 0:
        return nd, True
    A, guard = tb.dtn(lam)
    if not np.all(np.isfinite(A)):
        return nd, False
    mu = np.linalg.eigvalsh(A)
    scale = max(1.0, float(np.max(np.abs(mu))))
    safe = bool(np.min(guard) > POLE_GUARD and np.min(np.abs(mu)) > 1e-12 * scale)
    return nd + int(np.sum(mu > 0)), safe


def count_below(g: QuantumGraph, lam: float, spread: float | None = None):
    """Number of eigenvalues strictly below ``lam`` (with multiplicity).

    The evaluation point is moved by at most ``spread`` when ``lam`` sits
    numerically on an edge Dirichlet eigenvalue or on an eigenvalue.

    Returns
    -------
    count : int
    used : float
        The evaluation point actually used.
    safe : bool
        False when no reliable point was found within ``spread``.
    """
    if spread is None:
        spread = 1e-7 * max(1.0, abs(lam))
    tried = [lam] + [lam + s * spread * f for f in (0.13, 0.29, 0.47, 0.71, 0.97) for s in (1, -1)]
    first = None
    for x in tried:
        c, safe = _count_at(g, x)
        if first is None:
            first = (c, x)
        if safe:
            return c, x, True
    return first[0], first[1], False


# ---------------------------------------------------------------------------
# secular matrix

@dataclass(frozen=True)
class SecularMatrix:
    """Vertex-condition matrix at ``lam``.

    Column ``2j`` holds ``a_j = h(tail)`` and column ``2j + 1`` holds
    ``b_j / scale`` with ``b_j = h'(tail)``, so all entries are O(1);
    derivative rows are divided by ``scale = sqrt(max(1, |lam|))``.
    """

    lam: float
    matrix: np.ndarray
    scale: float
    edge_ids: tuple
    rows: tuple


def _secular_layout(g):
    """Row layout of the secular matrix as ``(row, col, edge, kind, coeff)`` arrays.

    Entry ``(row, col)`` accumulates ``coeff * value[kind, edge]`` with kinds
    0: one, 1: f(L), 2: g(L) * scale, 3: f'(L), 4: g'(L) * scale.  Rows of
    the delta condition carry an extra ``1 / scale`` applied at assembly.
    """
    eidx = {e.id: j for j, e in enumerate(g.edges)}
    entries, labels, delta_rows = [], [], []

    def value(r, eid, end, c):
        j = eidx[eid]
        if end == 0:
            entries.append((r, 2 * j, j, 0, c))
        else:
            entries.append((r, 2 * j, j, 1, c))
            entries.append((r, 2 * j + 1, j, 2, c))

    def outder(r, eid, end):
        j = eidx[eid]
        if end == 0:
            entries.append((r, 2 * j + 1, j, 5, 1.0))
        else:
            entries.append((r, 2 * j, j, 3, -1.0))
            entries.append((r, 2 * j + 1, j, 4, -1.0))

    r = 0
    for v in g.vertices:
        inc = g.incidence[v]
        if not inc:
            continue
        if g.alpha[v] == INF:
            for eid, end in inc:
                value(r, eid, end, 1.0)
                labels.append(("dirichlet", v, eid))
                r += 1
        else:
            for eid, end in inc[1:]:
                value(r, eid, end, 1.0)
                value(r, *inc[0], -1.0)
                labels.append(("continuity", v, eid))
                r += 1
            for eid, end in inc:
                outder(r, eid, end)
            if g.alpha[v] != 0:
                value(r, *inc[0], -g.alpha[v])
            labels.append(("delta", v, None))
            delta_rows.append(r)
            r += 1
    arr = np.array(entries, dtype=float).reshape(-1, 5)
    return (arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2].astype(int),
            arr[:, 3].astype(int), arr[:, 4], r, np.array(delta_rows, dtype=int),
            tuple(eidx), tuple(labels))


def secular(g: QuantumGraph, lam: float) -> SecularMatrix:
    """Assemble the secular matrix; its kernel is the ``lam``-eigenspace."""
    lam = float(lam)
    s = math.sqrt(max(1.0, abs(lam)))
    tb = _tables(g)
    rows, cols, edge, kind, coeff, nrow, delta, eids, labels = tb.layout
    ncol = 2 * len(g.edges)
    if nrow != ncol:
        raise ValidationError(f"secular matrix has shape ({nrow}, {ncol}), expected square")
    fL, gL, dfL, dgL = tb.transfer_arrays(lam)
    vals = np.stack([np.ones_like(fL), fL, gL * s, dfL, dgL * s, np.full_like(fL, s)])
    M = np.zeros((nrow, ncol))
    np.add.at(M, (rows, cols), coeff * vals[kind, edge])
    M[delta] /= s
    return SecularMatrix(lam, M, s, eids, labels)


def nullity(g: QuantumGraph, lam: float, rtol: float = NULLITY_RTOL):
    """Numerical nullity of the secular matrix and its singular values (ascending)."""
    sm = secular(g, lam)
    sv = np.linalg.svd(sm.matrix, compute_uv=False)[::-1]
    if sv.size == 0:
        return 0, sv
    return int(np.sum(sv < rtol * sv[-1])), sv


# ---------------------------------------------------------------------------
# eigenpairs

@dataclass(frozen=True, eq=False)
class Eigenpair:
    """An eigenvalue with an L2-orthonormal eigenbasis.

    Attributes
    ----------
    lam : float
    multiplicity : int
    coeffs : ndarray, shape (multiplicity, n_edges, 2)
        ``(h(tail), h'(tail))`` of each basis function on each edge.
    edge_ids : tuple of str
    residual : float
        Largest singular value of the secular matrix inside the eigenspace,
        relative to the largest overall.
    """

    lam: float
    multiplicity: int
    coeffs: np.ndarray
    edge_ids: tuple
    residual: float

    def solution(self, k: int = 0) -> dict:
        """Basis function ``k`` as a map edge id -> :class:`EdgeSolution`."""
        return {eid: EdgeSolution(float(a), float(b))
                for eid, (a, b) in zip(self.edge_ids, self.coeffs[k])}

    def to_json(self):
        return {"lambda": self.lam, "multiplicity": self.multiplicity, "residual": self.residual}


def _orthonormal_basis(g, lam, vecs):
    """Turn secular null vectors (scaled columns) into L2-orthonormal coefficient arrays."""
    s = math.sqrt(max(1.0, abs(lam)))
    m = vecs.shape[0]
    c = vecs.reshape(m, -1, 2).copy()
    c[:, :, 1] *= s
    G = np.zeros((m, m))
    for j, e in enumerate(g.edges):
        Me = gram(e, lam)
        G += c[:, j, :] @ Me @ c[:, j, :].T
    w, U = np.linalg.eigh(G)
    if np.min(w) <= 0:
        raise NumericError(f"degenerate eigenbasis at lam={lam}")
    c = np.einsum("ij,jkl->ikl", (U / np.sqrt(w)).T, c)
    for k in range(m):
        flat = c[k].ravel()
        big = np.abs(flat) > 1e-10 * np.max(np.abs(flat))
        if flat[np.argmax(big)] < 0:
            c[k] *= -1
    return c


def _pair_at(g, lam, m, basis=True):
    sm = secular(g, lam)
    _, sv, vt = np.linalg.svd(sm.matrix)
    vecs = vt[::-1][:m]
    sv = sv[::-1]
    residual = float(sv[m - 1] / sv[-1]) if sv.size else 0.0
    count = int(np.sum(sv < NULLITY_RTOL * sv[-1]))
    if count != m:
        log.warning("lam=%.12g: count-based multiplicity %d, secular nullity %d", lam, m, count)
    coeffs = _orthonormal_basis(g, lam, vecs) if basis else np.empty((m, 0, 2))
    return Eigenpair(float(lam), m, coeffs, sm.edge_ids, residual)


def _signed_det(g, lam):
    sign, logdet = np.linalg.slogdet(secular(g, lam).matrix)
    n = 2 * len(g.edges)
    return float(sign * math.exp(logdet / n)) if sign != 0 else 0.0


def _sigma_m(g, lam, m):
    sv = np.linalg.svd(secular(g, lam).matrix, compute_uv=False)
    return float(sv[-m] / sv[0])


def _scaled_det(lam, g, shift):
    sign, logdet = np.linalg.slogdet(secular(g, lam).matrix)
    return float(sign * math.exp(logdet - shift)) if sign != 0 else 0.0


def _refine(g, lo, hi, m):
    xtol = 1e-15 * max(1.0, abs(lo))
    if m == 1:
        (slo, llo), (shi, lhi) = (np.linalg.slogdet(secular(g, x).matrix) for x in (lo, hi))
        if slo == 0:
            return lo
        if shi == 0:
            return hi
        if slo * shi < 0:
            # a constant rescaling keeps the root simple for brentq
            shift = max(llo, lhi)
            return brentq(_scaled_det, lo, hi, args=(g, shift), xtol=xtol,
                          rtol=4 * np.finfo(float).eps, maxiter=200)
    return _golden(lambda x: _sigma_m(g, x, m), lo, hi, xtol)


def _golden(fun, lo, hi, xtol, maxiter=200):
    """Golden-section minimization; unlike Brent's method it has no sqrt(eps) floor."""
    r = (math.sqrt(5) - 1) / 2
    x1, x2 = hi - r * (hi - lo), lo + r * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(maxiter):
        if hi - lo <= xtol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - r * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + r * (hi - lo)
            f2 = fun(x2)
    return x1 if f1 <= f2 else x2


def _clusters(g, lo, hi, clo, chi, width, budget):
    """Bisect the count on [lo, hi] into brackets of at most ``width``."""
    out = []
    stack = [(lo, hi, clo, chi)]
    bad = []
    while stack:
        a, b, ca, cb = stack.pop()
        if cb == ca:
            continue
        if cb < ca:
            bad.append((a, b))
            continue
        if b - a <= width * max(1.0, abs(a)):
            out.append((a, b, cb - ca))
            continue
        if cb - ca == 1 and _signed_det(g, a) * _signed_det(g, b) < 0:
            # a single simple root with a sign change: leave it to the root finder
            out.append((a, b, 1))
            continue
        budget[0] -= 1
        if budget[0] < 0:
            raise IncompleteScanError("eigenvalue scan exceeded its evaluation budget",
                                      [(x[0], x[1]) for x in stack] + [(a, b)])
        mid = 0.5 * (a + b)
        cm, used, safe = count_below(g, mid, spread=0.2 * (b - a))
        if not safe and b - a <= 1e-5 * max(1.0, abs(a)):
            out.append((a, b, cb - ca))
            continue
        stack.append((used, b, cm, cb))
        stack.append((a, used, ca, cm))
    if bad:
        raise IncompleteScanError("non-monotone eigenvalue count", bad)
    out.sort()
    return out


def eigenvalues_in_window(g: QuantumGraph, window, tol: float = 1e-8,
                          max_evaluations: int = 200000, basis: bool = True) -> list:
    """All eigenvalues in ``(a, b]`` with multiplicities and orthonormal eigenbases.

    Parameters
    ----------
    g : QuantumGraph
    window : (float, float)
        Half-open window ``(a, b]``.  Eigenvalues within ``merge_tol`` of
        ``a`` count as equal to ``a`` and are excluded; those within
        ``merge_tol`` of ``b`` are included.
    tol : float
        Eigenvalues closer than ``tol * max(1, |lam|)`` are merged into a
        single entry with the combined multiplicity.
    basis : bool
        Compute the orthonormal eigenbasis of each eigenvalue.  Without it
        ``coeffs`` is empty, which is much cheaper when only eigenvalues matter.

    Returns
    -------
    list of Eigenpair
        Sorted by eigenvalue.

    Raises
    ------
    IncompleteScanError
        The count could not be resolved, or the number found leaves the
        corridor around the decoupled Dirichlet count.
    """
    a, b = map(float, window)
    if not a < b:
        raise ValidationError("window must satisfy a < b")
    if not 0 < tol <= 1e-6:
        raise ValidationError("tol must lie in (0, 1e-6]")
    if not g.edges:
        return []
    pad_a, pad_b = 1e-6 * max(1.0, abs(a)), 1e-6 * max(1.0, abs(b))
    clo, lo, _ = count_below(g, a - pad_a, spread=0.5 * pad_a)
    chi, hi, _ = count_below(g, b + pad_b, spread=0.5 * pad_b)
    budget = [max_evaluations]
    pairs = []
    for x0, x1, m in _clusters(g, lo, hi, clo, chi, tol, budget):
        lam = _refine(g, x0, x1, m)
        if lam <= a + merge_tol(a) or lam > b + merge_tol(b):
            continue
        pairs.append(_pair_at(g, lam, m, basis))
    # corridor check against the edge-decoupled Dirichlet problem
    tb = _tables(g)
    nd = tb.dirichlet_total(hi) - tb.dirichlet_total(lo)
    found = chi - clo
    if abs(found - nd) > len(g.edges) + len(g.interior):
        raise IncompleteScanError(f"count {found} outside the corridor around {nd}", [(a, b)])
    return pairs


def expand(pairs) -> np.ndarray:
    """Eigenvalues repeated according to multiplicity."""
    return np.array([p.lam for p in pairs for _ in range(p.multiplicity)])


def multiplicity_at(g: QuantumGraph, lam: float, rel_width: float = 1e-7) -> int:
    """Number of eigenvalues within ``rel_width * max(1, |lam|)`` of ``lam``."""
    w = rel_width * max(1.0, abs(lam))
    c1, _, _ = count_below(g, lam - w, spread=0.4 * w)
    c2, _, _ = count_below(g, lam + w, spread=0.4 * w)
    return c2 - c1


def lowest_eigenvalues(g: QuantumGraph, k: int, tol: float = 1e-8) -> np.ndarray:
    """The ``k`` smallest eigenvalues, repeated by multiplicity."""
    lo = -1.0
    while count_below(g, lo)[0] > 0:
        lo *= 2
        if lo < -1e12:
            raise NumericError("spectrum appears unbounded below")
    hi = 1.0
    while count_below(g, hi)[0] < k:
        hi *= 2
        if hi > 1e12:
            raise NumericError("could not reach the requested number of eigenvalues")
    vals = expand(eigenvalues_in_window(g, (lo, hi), tol))
    return vals[:k]


def counting_measure(g: QuantumGraph, window, tol: float = 1e-8) -> list:
    """Eigenvalues in the window with mass ``multiplicity / total length``."""
    L = g.total_length
    return [(p.lam, p.multiplicity / L) for p in eigenvalues_in_window(g, window, tol)]


def eigenfunction_vertex_trace(g: QuantumGraph, pair: Eigenpair, k: int = 0,
                               check: float | None = 1e-8) -> dict:
    """Vertex values and outgoing derivatives of basis function ``k``.

    Returns
    -------
    dict
        vertex id -> ``(value, [(edge id, outgoing derivative), ...])`` in
        incidence order.

    Raises
    ------
    NumericError
        End values at a vertex disagree by more than ``check`` relative to
        the scale of the function.
    """
    lam = pair.lam
    coeff = {eid: pair.coeffs[k, j] for j, eid in enumerate(pair.edge_ids)}
    ts = {e.id: transfer(e, lam) for e in g.edges}
    s = math.sqrt(max(1.0, abs(lam)))
    ends = {}
    scale = 0.0
    for v in g.vertices:
        vals, ders = [], []
        for eid, end in g.incidence[v]:
            a, b = coeff[eid]
            t = ts[eid]
            if end == 0:
                vals.append(a)
                ders.append((eid, b))
            else:
                vals.append(a * t.fL + b * t.gL)
                ders.append((eid, -(a * t.dfL + b * t.dgL)))
            scale = max(scale, abs(vals[-1]), abs(ders[-1][1]) / s)
        ends[v] = (vals, ders)
    out = {}
    for v, (vals, ders) in ends.items():
        if not vals:
            out[v] = (0.0, [])
            continue
        if check is not None and max(vals) - min(vals) > check * max(scale, 1e-300):
            raise NumericError(f"vertex {v}: end values disagree at lam={lam}")
        val = 0.0 if g.alpha[v] == INF else float(np.mean(vals))
        out[v] = (val, ders)
    return out
