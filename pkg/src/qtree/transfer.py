"""Fundamental solutions of the edge equation ``-h'' + W h = lam h``.

On an edge of length ``L`` the basis ``f, g`` is fixed by
``f(0) = 1, f'(0) = 0`` and ``g(0) = 0, g'(0) = 1``.  Every solution is
``h = a f + b g`` with ``a = h(0)`` and ``b = h'(0)``, and

    [h(L), h'(L)] = M [h(0), h'(0)],   M = [[fL, gL], [dfL, dgL]],

with ``det M = fL dgL - dfL gL = 1``.

Constant pieces use closed forms.  Linear pieces of a sampled potential are
integrated with an adaptive 8th order Runge-Kutta scheme (``DOP853``).
The Dirichlet spectrum of an edge is located through the Pruefer angle of
``g``, which is continuous and increasing in ``lam``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import NumericError, ValidationError
from .graph import Edge

__all__ = [
    "TransferSample", "EdgeSolution", "transfer", "transfer_matrix", "fundamental",
    "evaluate", "gram", "prufer_angle", "dirichlet_count", "edge_dirichlet_eigenvalues",
    "reverse_consistency", "sturm_bracket",
]

SERIES_CUTOFF = 1e-12
ODE_RTOL = 1e-13
ODE_ATOL = 1e-15


@dataclass(frozen=True)
class TransferSample:
    """Boundary data ``f(L), f'(L), g(L), g'(L)`` for one edge, orientation and ``lam``."""

    fL: float
    dfL: float
    gL: float
    dgL: float

    @property
    def matrix(self):
        return np.array([[self.fL, self.gL], [self.dfL, self.dgL]])

    @property
    def wronskian(self):
        return self.fL * self.dgL - self.dfL * self.gL


@dataclass(frozen=True)
class EdgeSolution:
    """Coefficients of ``a f + b g``; with ``reverse`` the basis lives on the reversed edge."""

    a: float
    b: float
    reverse: bool = False


# ---------------------------------------------------------------------------
# closed forms and the ODE path

def _const_matrices(z, x):
    """Transfer matrices over lengths ``x`` for constant ``lam - W = z``; shape (..., 2, 2)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (2, 2))
    if abs(z) < SERIES_CUTOFF:
        zx2 = z * x * x
        out[..., 0, 0] = 1 - zx2 / 2
        out[..., 0, 1] = x * (1 - zx2 / 6)
        out[..., 1, 0] = -z * x * (1 - zx2 / 6)
        out[..., 1, 1] = 1 - zx2 / 2
    elif z > 0:
        k = math.sqrt(z)
        c, s = np.cos(k * x), np.sin(k * x)
        out[..., 0, 0] = c
        out[..., 0, 1] = s / k
        out[..., 1, 0] = -k * s
        out[..., 1, 1] = c
    else:
        k = math.sqrt(-z)
        c, s = np.cosh(k * x), np.sinh(k * x)
        out[..., 0, 0] = c
        out[..., 0, 1] = s / k
        out[..., 1, 0] = k * s
        out[..., 1, 1] = c
    return out


def _ode_rhs(x0, x1, w0, w1, lam):
    slope = (w1 - w0) / (x1 - x0)

    def rhs(x, y):
        q = w0 + slope * (x - x0) - lam
        out = np.empty_like(y)
        out[0] = y[2]
        out[1] = y[3]
        out[2] = q * y[0]
        out[3] = q * y[1]
        if y.shape[0] == 5:
            th = y[4]
            out[4] = math.cos(th) ** 2 - q * math.sin(th) ** 2
        return out

    return rhs


def _ode_segment(x0, x1, w0, w1, lam, theta=None, t_eval=None):
    y0 = [1.0, 0.0, 0.0, 1.0] + ([] if theta is None else [theta])
    sol = solve_ivp(_ode_rhs(x0, x1, w0, w1, lam), (x0, x1), y0, method="DOP853",
                    rtol=ODE_RTOL, atol=ODE_ATOL, t_eval=t_eval)
    if not sol.success:
        raise NumericError(f"edge integration failed on [{x0}, {x1}] at lam={lam}: {sol.message}")
    return sol


def _segments(edge: Edge, force_ode=False):
    segs = edge.potential.segments(edge.length)
    return [(x0, x1, w0, w1, force_ode or w0 != w1) for x0, x1, w0, w1 in segs]


def transfer_matrix(edge: Edge, lam: float, force_ode: bool = False) -> np.ndarray:
    """2x2 matrix mapping ``(h(0), h'(0))`` to ``(h(L), h'(L))``."""
    m = np.eye(2)
    for x0, x1, w0, w1, ode in _segments(edge, force_ode):
        if ode:
            y = _ode_segment(x0, x1, w0, w1, lam).y[:, -1]
            seg = np.array([[y[0], y[1]], [y[2], y[3]]])
        else:
            seg = _const_matrices(lam - w0, x1 - x0)
        m = seg @ m
    return m


def transfer(edge: Edge, lam: float, reverse: bool = False, force_ode: bool = False) -> TransferSample:
    """Boundary values of the fundamental solutions.

    Parameters
    ----------
    edge : Edge
    lam : float
        Spectral parameter.
    reverse : bool
        Use the opposite orientation (coordinate starts at ``head``).
    force_ode : bool
        Integrate numerically even on constant pieces (cross-check path).

    Returns
    -------
    TransferSample
    """
    if reverse:
        edge = edge.reversed()
    m = transfer_matrix(edge, float(lam), force_ode)
    return TransferSample(float(m[0, 0]), float(m[1, 0]), float(m[0, 1]), float(m[1, 1]))


def fundamental(edge: Edge, lam: float, xs) -> np.ndarray:
    """Values ``(f, g, f', g')`` at the points ``xs``; returns an array of shape (len(xs), 4)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs < -1e-14 * edge.length) or np.any(xs > edge.length * (1 + 1e-14)):
        raise ValidationError("evaluation point outside the edge")
    out = np.empty((xs.size, 4))
    done = np.zeros(xs.size, dtype=bool)
    m = np.eye(2)
    segs = _segments(edge)
    for i, (x0, x1, w0, w1, ode) in enumerate(segs):
        last = i == len(segs) - 1
        sel = (~done) & ((xs <= x1) | last)
        loc = np.clip(xs[sel], x0, x1)
        if ode:
            pts = np.unique(np.concatenate([loc, [x1]]))
            sol = _ode_segment(x0, x1, w0, w1, lam, t_eval=pts)
            ys = sol.y.T
            mats = ys[:, :4].reshape(-1, 2, 2)
            lookup = {p: k for k, p in enumerate(pts)}
            part = mats[[lookup[p] for p in loc]] if loc.size else np.empty((0, 2, 2))
            seg = mats[-1]
        else:
            part = _const_matrices(lam - w0, loc - x0)
            seg = _const_matrices(lam - w0, x1 - x0)
        if loc.size:
            full = part @ m
            out[sel] = np.stack([full[:, 0, 0], full[:, 0, 1], full[:, 1, 0], full[:, 1, 1]], axis=1)
            done |= sel
        m = seg @ m
    return out


def evaluate(edge: Edge, sol: EdgeSolution, lam: float, x: float):
    """Value and derivative of ``a f + b g`` at ``x`` (in the solution's own coordinate)."""
    if sol.reverse:
        edge = edge.reversed()
    if not (-1e-14 <= x <= edge.length * (1 + 1e-14)):
        raise ValidationError(f"x={x} outside [0, {edge.length}]")
    f, g, df, dg = fundamental(edge, lam, [x])[0]
    return sol.a * f + sol.b * g, sol.a * df + sol.b * dg


@lru_cache(maxsize=256)
def _gauss(n):
    return np.polynomial.legendre.leggauss(n)


def gram(edge: Edge, lam: float) -> np.ndarray:
    """Matrix of L2 products ``[[<f,f>, <f,g>], [<g,f>, <g,g>]]`` over the edge."""
    nodes, weights = [], []
    for x0, x1, w0, w1, _ in _segments(edge):
        z = abs(lam - min(w0, w1)) + abs(w1 - w0)
        n = 24 + int(math.ceil(2.0 * math.sqrt(z) * (x1 - x0)))
        t, w = _gauss(n)
        nodes.append(x0 + (x1 - x0) * (t + 1) / 2)
        weights.append(w * (x1 - x0) / 2)
    nodes, weights = np.concatenate(nodes), np.concatenate(weights)
    vals = fundamental(edge, lam, nodes)
    fg = vals[:, :2]
    return (fg * weights[:, None]).T @ fg


# ---------------------------------------------------------------------------
# Pruefer angle and the Dirichlet spectrum

def _wrap(x):
    """Map an angle into (-pi, pi]."""
    return x - 2 * math.pi * math.ceil((x - math.pi) / (2 * math.pi))


def prufer_angle(edge: Edge, lam: float) -> float:
    """Continuous angle ``theta(L)`` of ``(g', g)`` with ``theta(0) = 0``.

    ``g`` vanishes exactly when ``theta`` crosses a multiple of pi, so the
    number of Dirichlet eigenvalues below ``lam`` is ``ceil(theta / pi) - 1``.
    """
    lam = float(lam)
    theta = 0.0
    vec = np.array([0.0, 1.0])  # (g, g')
    for x0, x1, w0, w1, ode in _segments(edge):
        length = x1 - x0
        if ode:
            y = _ode_segment(x0, x1, w0, w1, lam, theta=theta).y[:, -1]
            vec = np.array([[y[0], y[1]], [y[2], y[3]]]) @ vec
            exact = math.atan2(vec[0], vec[1])
            theta = y[4] + _wrap(exact - y[4])
        else:
            z = lam - w0
            if z > SERIES_CUTOFF:
                k = math.sqrt(z)
                psi = theta + _wrap(math.atan2(k * math.sin(theta), math.cos(theta)) - theta)
                psi += k * length
                theta = psi + _wrap(math.atan2(math.sin(psi) / k, math.cos(psi)) - psi)
            else:
                vec_new = _const_matrices(z, length) @ vec
                exact = math.atan2(vec_new[0], vec_new[1])
                theta = theta + _wrap(exact - theta)
            vec = _const_matrices(z, length) @ vec
        nrm = math.hypot(vec[0], vec[1])
        vec = vec / nrm
    return theta


def dirichlet_count(edge: Edge, lam: float) -> int:
    """Number of Dirichlet eigenvalues of the edge strictly below ``lam``."""
    theta = prufer_angle(edge, lam)
    return max(int(math.ceil(theta / math.pi - 1e-13)) - 1, 0)


def sturm_bracket(edge: Edge, n: int):
    """Interval containing the ``n``-th Dirichlet eigenvalue (n >= 1)."""
    qmin, qmax = edge.potential.bounds(edge.length)
    base = (n * math.pi / edge.length) ** 2
    return base + qmin, base + qmax


def edge_dirichlet_eigenvalues(edge: Edge, window, rtol: float = 1e-11) -> np.ndarray:
    """Dirichlet eigenvalues of a single edge inside ``(a, b]``.

    Each eigenvalue is the root of ``theta(L; lam) = n pi`` inside its
    Sturm comparison bracket, solved to relative accuracy ``rtol``.

    Raises
    ------
    NumericError
        A root left its comparison bracket.
    """
    a, b = map(float, window)
    if not a < b:
        raise ValidationError("window must satisfy a < b")
    qmin, qmax = edge.potential.bounds(edge.length)
    L = edge.length
    if b <= qmin:
        return np.empty(0)
    n_lo = max(1, int(math.floor(L * math.sqrt(max(a - qmax, 0.0)) / math.pi)) - 1)
    n_hi = int(math.floor(L * math.sqrt(max(b - qmin, 0.0)) / math.pi)) + 1
    roots = []
    for n in range(n_lo, n_hi + 1):
        lo, hi = sturm_bracket(edge, n)
        if lo > b:
            break
        if hi <= a:
            continue
        pad = 1e-9 * max(1.0, abs(hi))
        target = n * math.pi

        def h(lam):
            return prufer_angle(edge, lam) - target

        lo2, hi2 = lo - pad, hi + pad
        flo, fhi = h(lo2), h(hi2)
        if flo > 0 or fhi < 0:
            raise NumericError(f"edge {edge.id}: Dirichlet root {n} escaped its bracket")
        if flo == 0:
            lam = lo2
        elif fhi == 0:
            lam = hi2
        else:
            lam = brentq(h, lo2, hi2, xtol=rtol * 1e-3 * max(1.0, abs(lo)), rtol=4 * np.finfo(float).eps,
                         maxiter=200)
        if not (lo - 1e-10 * max(1.0, abs(lo)) <= lam <= hi + 1e-10 * max(1.0, abs(hi))):
            raise NumericError(f"edge {edge.id}: Dirichlet root {n} violates its Sturm bracket")
        if a < lam <= b:
            roots.append(lam)
    return np.asarray(roots)


def reverse_consistency(edge: Edge, lam: float, tol: float = 1e-9, force_ode: bool = False):
    """Check the identities linking the two orientations of an edge.

    ``f(L) = g'_rev(L)``, ``g(L) = g_rev(L)``, ``f'(L) = f'_rev(L)``, each
    computed independently.

    Returns
    -------
    ok : bool
    residuals : ndarray of shape (3,)
    """
    fw = transfer(edge, lam, force_ode=force_ode)
    bw = transfer(edge, lam, reverse=True, force_ode=force_ode)
    res = np.abs([fw.fL - bw.dgL, fw.gL - bw.gL, fw.dfL - bw.dfL])
    return bool(np.all(res <= tol)), res
