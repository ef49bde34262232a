"""Finite covers, density-of-states bounds and experiments.

Covers are permutation-voltage lifts: every base edge ``e = (u, v)`` gets a
permutation ``p_e`` of ``{0, ..., n-1}`` and the lift joins ``(u, i)`` to
``(v, p_e[i])``.  Random lifts with rejection on the girth give covers that
look locally like the universal cover.
"""
from __future__ import annotations

import csv
import io
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .aomoto import AomotoReport, point_spectrum
from .compact import count_below, merge_tol, multiplicity_at
from .errors import CapError, NumericError, ValidationError
from .graph import INF, Edge, QuantumGraph

__all__ = [
    "VoltageAssignment", "CoverGraph", "build_cover", "verify_cover", "girth", "random_voltage",
    "random_cover_with_girth", "cover_multiplicity", "cover_multiplicity_check",
    "cumulative_bounds", "segment_bounds", "counting_below", "weyl_check", "DosReport",
    "dos_bounds_check", "convergence_experiment", "convergence_csv", "perturb_experiment",
    "thread_count", "MAX_COVER_EDGES",
]

MAX_COVER_EDGES = 200


def thread_count() -> int:
    """Worker threads for independent trials, from ``QTS_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("QTS_THREADS", "1")))
    except ValueError:
        raise ValidationError("QTS_THREADS must be a positive integer") from None


# ---------------------------------------------------------------------------
# covers

@dataclass(frozen=True, eq=False)
class VoltageAssignment:
    """Sheet count ``n`` and a permutation per base edge (tail sheet -> head sheet)."""

    n: int
    perm: dict

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValidationError("the number of sheets must be positive")
        perm = {}
        for eid, p in self.perm.items():
            p = tuple(int(i) for i in p)
            if sorted(p) != list(range(self.n)):
                raise ValidationError(f"voltage on {eid} is not a permutation of 0..{self.n - 1}")
            perm[str(eid)] = p
        object.__setattr__(self, "perm", perm)

    def inverse(self, eid):
        p = self.perm[eid]
        inv = [0] * self.n
        for i, j in enumerate(p):
            inv[j] = i
        return tuple(inv)


@dataclass(frozen=True, eq=False)
class CoverGraph:
    """An ``n``-sheeted cover with its covering map.

    ``fiber_map`` sends cover vertex and edge ids to base ids.
    """

    cover: QuantumGraph
    base: QuantumGraph
    fiber_map: dict
    n: int
    voltage: VoltageAssignment | None = field(default=None)


def _sheet(x, i):
    return f"{x}#{i}"


def build_cover(g: QuantumGraph, va: VoltageAssignment) -> CoverGraph:
    """Lift ``g`` along a voltage assignment; the covering conditions are re-verified."""
    n = va.n
    missing = [e.id for e in g.edges if e.id not in va.perm and n > 1]
    if missing:
        raise ValidationError(f"no voltage for edges {missing}")
    alpha, fmap, edges = {}, {}, []
    for v in g.vertices:
        for i in range(n):
            alpha[_sheet(v, i)] = g.alpha[v]
            fmap[_sheet(v, i)] = v
    for e in g.edges:
        p = va.perm.get(e.id, tuple(range(n)))
        for i in range(n):
            eid = _sheet(e.id, i)
            edges.append(Edge(eid, _sheet(e.tail, i), _sheet(e.head, p[i]), e.length, e.potential))
            fmap[eid] = e.id
    cg = CoverGraph(QuantumGraph(alpha, edges), g, fmap, n, va)
    verify_cover(cg)
    return cg


def verify_cover(cg: CoverGraph) -> None:
    """Raise ``ValidationError`` unless ``fiber_map`` is a covering map preserving all data."""
    c, b, fm = cg.cover, cg.base, cg.fiber_map
    if len(c.vertices) != cg.n * len(b.vertices) or len(c.edges) != cg.n * len(b.edges):
        raise ValidationError("cover has the wrong number of vertices or edges")
    for v in c.vertices:
        bv = fm[v]
        if c.alpha[v] != b.alpha[bv]:
            raise ValidationError(f"alpha not preserved at {v}")
        star = sorted((fm[eid], end) for eid, end in c.incidence[v])
        if star != sorted(b.incidence[bv]):
            raise ValidationError(f"covering map is not a local isomorphism at {v}")
    for e in c.edges:
        be = b.edge[fm[e.id]]
        if (fm[e.tail], fm[e.head]) != (be.tail, be.head) or e.length != be.length \
                or e.potential != be.potential:
            raise ValidationError(f"edge data not preserved on {e.id}")


def _girth(vertices, pairs) -> float:
    # BFS from every vertex; pairs are (edge id, tail, head)
    best = INF
    adj = {v: [] for v in vertices}
    for eid, t, h in pairs:
        if t == h:
            return 1
        adj[t].append((h, eid))
        adj[h].append((t, eid))
    for root in vertices:
        dist = {root: 0}
        via = {root: None}
        q = deque([root])
        while q:
            v = q.popleft()
            if 2 * dist[v] + 1 >= best:
                break
            for w, eid in adj[v]:
                if eid == via[v]:
                    continue
                if w in dist:
                    best = min(best, dist[v] + dist[w] + 1)
                else:
                    dist[w] = dist[v] + 1
                    via[w] = eid
                    q.append(w)
    return best


def girth(g) -> float:
    """Length of the shortest cycle (number of edges); ``inf`` for forests.

    Accepts a :class:`QuantumGraph` or a :class:`CoverGraph`.  Loops count
    as cycles of length 1 and parallel edges as cycles of length 2.
    """
    if isinstance(g, CoverGraph):
        g = g.cover
    return _girth(g.vertices, [(e.id, e.tail, e.head) for e in g.edges])


def _lift_pairs(g, n, perm):
    return [(_sheet(e.id, i), _sheet(e.tail, i), _sheet(e.head, perm[e.id][i]))
            for e in g.edges if e.id in perm for i in range(n)]


def random_voltage(g: QuantumGraph, n: int, rng: np.random.Generator) -> VoltageAssignment:
    """Independent uniform permutations, drawn in sorted edge order."""
    return VoltageAssignment(n, {e.id: tuple(rng.permutation(n).tolist()) for e in g.edges})


def random_cover_with_girth(g: QuantumGraph, n: int, girth_min: int = 0, seed: int = 0,
                            max_tries: int = 1000, max_edges: int = MAX_COVER_EDGES,
                            edge_draws: int = 200) -> CoverGraph:
    """First random ``n``-lift with girth at least ``girth_min``.

    Each try draws the permutations edge by edge in sorted order.  A draw
    that pushes the girth of the partial lift below ``girth_min`` is redrawn,
    up to ``edge_draws`` times; adding edges never raises the girth, so this
    only discards lifts that would fail anyway.  A try that runs out of
    redraws is completed at random and counted as a failure.  With
    ``girth_min`` at most the base girth the first try is a plain draw of
    independent uniform permutations.

    Raises
    ------
    NumericError
        No lift reached ``girth_min`` within ``max_tries`` tries; the message
        names the best girth seen.
    qtree.errors.CapError
        ``n * |E|`` exceeds ``max_edges``.
    """
    if n * len(g.edges) > max_edges:
        raise CapError(f"cover with {n * len(g.edges)} edges exceeds the cap of {max_edges}")
    rng = np.random.default_rng(seed)
    sheets = [_sheet(v, i) for v in g.vertices for i in range(n)]
    best = -1
    for _ in range(max(1, max_tries)):
        perm = {}
        stuck = False
        for e in g.edges:
            for _ in range(max(1, edge_draws) if not stuck else 1):
                perm[e.id] = tuple(rng.permutation(n).tolist())
                if stuck or _girth(sheets, _lift_pairs(g, n, perm)) >= girth_min:
                    break
            else:
                stuck = True
        cg = build_cover(g, VoltageAssignment(n, perm))
        gi = girth(cg)
        if gi >= girth_min:
            return cg
        best = max(best, gi)
    raise NumericError(f"no {n}-lift with girth >= {girth_min} in {max_tries} tries; best girth {best}")


def cover_multiplicity(cg: CoverGraph, lam: float) -> int:
    """Multiplicity of ``lam`` in the spectrum of the cover."""
    return multiplicity_at(cg.cover, lam)


def cover_multiplicity_check(g: QuantumGraph, report: AomotoReport | None, cg: CoverGraph) -> bool:
    """Whether ``lam`` has multiplicity at least ``n * index`` on the cover.

    Vacuously true without a report (``lam`` is not an atom).
    """
    if cg.base != g:
        raise ValidationError("the cover does not cover this graph")
    if report is None:
        return True
    return cover_multiplicity(cg, report.lam) >= cg.n * report.index


# ---------------------------------------------------------------------------
# density-of-states bounds

def _constants(g):
    wb = np.array([g.potential_bounds[e.id] for e in g.edges])
    lengths = np.array([e.length for e in g.edges])
    return lengths, wb[:, 0], wb[:, 1], len(g.edges), len(g.interior), g.total_length


def cumulative_bounds(g: QuantumGraph, x: float):
    """Bounds on the mass of ``(-inf, x]`` for ``x`` above the largest potential value.

    Returns
    -------
    lower, upper : float
        ``sum l_e sqrt(x - Wmax_e) / (pi L) - |E| / L`` (clipped at 0) and
        ``sum l_e sqrt(x - Wmin_e) / (pi L) + |V_int| / L``.
    """
    ell, wmin, wmax, ne, nv, L = _constants(g)
    if not x > wmax.max():
        raise ValidationError("the bounds need x above the largest potential value")
    lo = max(float(np.sum(ell * np.sqrt(x - wmax))) / (math.pi * L) - ne / L, 0.0)
    hi = float(np.sum(ell * np.sqrt(x - wmin))) / (math.pi * L) + nv / L
    return lo, hi


def segment_bounds(g: QuantumGraph, a: float, b: float):
    """Bounds on the mass of ``(a, b)`` and ``[a, b]`` for ``Wmax < a <= b``.

    The lower bound divides the square-root sum by ``pi L`` like the upper
    one, which is what the cumulative bounds give when subtracted.
    """
    ell, wmin, wmax, ne, nv, L = _constants(g)
    if not (a > wmax.max() and b >= a):
        raise ValidationError("the bounds need Wmax < a <= b")
    c = (ne + nv) / L
    lo = max(float(np.sum(ell * (np.sqrt(b - wmax) - np.sqrt(a - wmin)))) / (math.pi * L) - c, 0.0)
    hi = float(np.sum(ell * (np.sqrt(b - wmin) - np.sqrt(a - wmax)))) / (math.pi * L) + c
    return lo, hi


def counting_below(g: QuantumGraph, x: float) -> int:
    """Number of eigenvalues ``<= x``; eigenvalues up to ``1e-6 max(1, |x|)`` above ``x`` count too.

    The offset keeps the evaluation point clear of edge Dirichlet
    eigenvalues sitting exactly at ``x``, where the count is ill-conditioned.
    """
    d = 100 * merge_tol(x)
    c, _, safe = count_below(g, x + d, spread=0.5 * d)
    if not safe:
        raise NumericError(f"eigenvalue count at {x} is not reliable")
    return c


def weyl_check(g: QuantumGraph, x: float):
    """Weyl ratio ``N(x) pi / (L sqrt(x))`` and its allowed deviation from 1.

    Zero potential only.  Returns ``(ratio, slack, ok)`` with
    ``slack = (|E| + |V_int|) pi / (L sqrt(x))``.
    """
    if not g.has_zero_potential():
        raise ValidationError("the Weyl check is stated for zero potential")
    if x <= 0:
        raise ValidationError("x must be positive")
    L = g.total_length
    ratio = counting_below(g, x) * math.pi / (L * math.sqrt(x))
    slack = (len(g.edges) + len(g.interior)) * math.pi / (L * math.sqrt(x))
    return ratio, slack, bool(abs(ratio - 1.0) <= slack)


@dataclass
class DosReport:
    """Inequalities checked by :func:`dos_bounds_check`.

    Each check is ``(name, lower, value, upper)``; ``ok`` is true when every
    value lies in its interval (up to a relative ``1e-12``).
    """

    applicable: bool
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return self.applicable and all(lo - 1e-12 * max(1, abs(lo)) <= v <= hi + 1e-12 * max(1, abs(hi))
                                       for _, lo, v, hi in self.checks)

    def to_json(self):
        return {"applicable": self.applicable, "ok": self.ok,
                "checks": [{"name": n, "lower": lo, "value": v, "upper": hi}
                           for n, lo, v, hi in self.checks]}


def dos_bounds_check(g: QuantumGraph, window, atoms=(), covers=()) -> DosReport:
    """Check atom masses and cover counting measures against the bounds.

    Parameters
    ----------
    window : (float, float)
        ``(a, b)`` with ``a`` above the largest potential value.
    atoms : iterable of AomotoReport or float
        Atoms of the density of states; their total mass inside ``(a, b)``
        must not exceed the upper segment bound.
    covers : iterable of CoverGraph or QuantumGraph
        Finite covers (``g`` itself included as a 1-cover).  Their
        normalized counts of ``(a, b]`` must obey both segment bounds and
        their counts of ``(-inf, b]`` both cumulative bounds.
    """
    a, b = map(float, window)
    wmax = max(w for _, w in g.potential_bounds.values())
    if not (a > wmax and b > a):
        return DosReport(False)
    lo, hi = segment_bounds(g, a, b)
    clo, chi = cumulative_bounds(g, b)
    rep = DosReport(True)
    masses = []
    for at in atoms:
        lam, m = (at.lam, at.atom_mass) if isinstance(at, AomotoReport) else at
        if a < lam < b:
            masses.append(m)
    rep.checks.append(("atoms in (a,b)", 0.0, float(math.fsum(masses)), hi))
    for k, c in enumerate(covers):
        cover = c.cover if isinstance(c, CoverGraph) else c
        if not math.isclose(cover.total_length / g.total_length,
                            round(cover.total_length / g.total_length), rel_tol=1e-9):
            raise ValidationError("graph is not a cover of the base")
        total = cover.total_length
        nb, na = counting_below(cover, b), counting_below(cover, a)
        rep.checks.append((f"cover {k}: (a,b]", lo, (nb - na) / total, hi))
        rep.checks.append((f"cover {k}: (-inf,b]", clo, nb / total, chi))
    return rep


# ---------------------------------------------------------------------------
# experiments

def convergence_experiment(g: QuantumGraph, window, n_list, girth_targets=None, seed: int = 0,
                           atoms=None, max_tries: int = 1000) -> list:
    """Mass of each engine atom in the counting measures of girth-controlled covers.

    Returns
    -------
    list of dict
        Rows with keys ``n, girth, lambda, mass, engine_mass``.  ``mass`` is
        the cover multiplicity of ``lambda`` divided by the cover's total length.
    """
    if atoms is None:
        atoms = point_spectrum(g, window)
    if girth_targets is None:
        girth_targets = [0] * len(n_list)
    if len(girth_targets) != len(n_list):
        raise ValidationError("one girth target per cover size")
    rows = []
    for k, (n, gmin) in enumerate(zip(n_list, girth_targets)):
        cg = random_cover_with_girth(g, int(n), int(gmin), seed + k, max_tries)
        gi = girth(cg)
        for at in atoms:
            m = cover_multiplicity(cg, at.lam)
            rows.append({"n": int(n), "girth": gi, "lambda": at.lam,
                         "mass": m / cg.cover.total_length, "engine_mass": at.atom_mass})
    return rows


def convergence_csv(rows) -> str:
    """CSV text with columns ``n, girth, lambda, mass, engine_mass``."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["n", "girth", "lambda", "mass", "engine_mass"],
                       lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _check_perturbable(g):
    if girth(g) == INF:
        raise ValidationError("perturbation experiment needs a graph with a cycle")
    if not g.has_zero_potential():
        raise ValidationError("perturbation experiment needs zero potential")
    for v in g.vertices:
        if g.alpha[v] == INF and g.degree(v) != 1:
            raise ValidationError("Dirichlet conditions are only allowed at degree-one vertices")


def perturb_experiment(g: QuantumGraph, epsilon: float, trials: int, window, seed: int = 0) -> dict:
    """Share of length perturbations whose tree has no eigenvalue in the window.

    Trial ``t`` multiplies every length (in sorted edge order) by an
    independent factor uniform in ``[1 - epsilon, 1 + epsilon]`` drawn from
    ``default_rng(seed + t)``.

    Returns
    -------
    dict
        ``trials``, ``empty`` (count), ``empty_fraction`` (``None`` when
        ``trials == 0``) and ``atoms``: per trial, the list of atom ``lam``.
    """
    _check_perturbable(g)
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    if trials < 0:
        raise ValidationError("trials must be non-negative")

    def run(t):
        rng = np.random.default_rng(seed + t)
        f = rng.uniform(1 - epsilon, 1 + epsilon, size=len(g.edges))
        h = g.with_lengths({e.id: e.length * fk for e, fk in zip(g.edges, f)})
        return [r.lam for r in point_spectrum(h, window)]

    workers = thread_count()
    if workers > 1 and trials > 1:
        with ThreadPoolExecutor(workers) as ex:
            found = list(ex.map(run, range(trials)))
    else:
        found = [run(t) for t in range(trials)]
    empty = sum(1 for f in found if not f)
    return {"trials": trials, "empty": empty,
            "empty_fraction": (empty / trials) if trials else None, "atoms": found}
