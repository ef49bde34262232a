import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from oracles import constant_transfer, linear_transfer, sampled_transfer
from qtree.errors import ValidationError
from qtree.graph import Constant, Edge, PiecewiseConstant, QuantumGraph, Sampled, Zero
from qtree.transfer import (EdgeSolution, dirichlet_count, edge_dirichlet_eigenvalues, evaluate,
                            reverse_consistency, sturm_bracket, transfer)

PI = math.pi


def data(t):
    return np.array([t.fL, t.dfL, t.gL, t.dgL])


# ---------------------------------------------------------------------------
# closed-form examples

@pytest.mark.parametrize("pot,lam,length,expected", [
    (Zero(), 1.0, 2 * PI, (1, 0, 0, 1)),
    (Zero(), 0.0, 3.0, (1, 0, 3, 1)),
    (Constant(2.0), 3.0, PI, (-1, 0, 0, -1)),
])
def test_transfer_examples(pot, lam, length, expected):
    t = transfer(Edge("e", "a", "b", length, pot), lam)
    np.testing.assert_allclose(data(t), expected, atol=1e-13)


@pytest.mark.parametrize("c", [0.0, 1.5, -2.0])
@pytest.mark.parametrize("dz", [-30.0, -1.0, -1e-6, -1e-13, 0.0, 1e-13, 1e-6, 0.5, 10.0, 90.0])
@pytest.mark.parametrize("length", [0.1, 1.0, 1.37])
def test_transfer_constant_matches_mpmath(c, dz, length):
    t = transfer(Edge("e", "a", "b", length, Constant(c)), c + dz)
    ref = constant_transfer(c, c + dz, length)
    np.testing.assert_allclose(data(t), ref, rtol=1e-12, atol=1e-12)


# frozen from the Airy-function oracle (W(x) = x on [0, 1]); see oracles.linear_transfer
AIRY_W_EQ_X = {
    5.0: (-0.57501166292222, -1.81351834923161, 0.40167794243955, -0.47225073579250),
    -3.0: (3.20656129138738, 5.91917656830794, 1.69423049979488, 3.43933842940105),
}


@pytest.mark.parametrize("lam", sorted(AIRY_W_EQ_X))
def test_transfer_sampled_linear_frozen(lam):
    e = Edge("e", "a", "b", 1.0, Sampled((0.0, 1.0), (0.0, 1.0)))
    np.testing.assert_allclose(data(transfer(e, lam)), AIRY_W_EQ_X[lam], atol=1e-12)
    np.testing.assert_allclose(linear_transfer(0, 1, lam, 1.0), AIRY_W_EQ_X[lam], atol=1e-12)


@pytest.mark.parametrize("lam", [-8.0, 0.3, 12.0, 60.0])
def test_transfer_sampled_multisegment_matches_airy(lam):
    grid, vals = (0.0, 0.3, 0.8, 1.3), (2.0, -1.0, 4.0, 0.5)
    t = transfer(Edge("e", "a", "b", 1.3, Sampled(grid, vals)), lam)
    ref = sampled_transfer(grid, vals, lam)
    scale = max(1.0, np.max(np.abs(ref)))
    np.testing.assert_allclose(data(t), ref, atol=1e-11 * scale)


@pytest.mark.parametrize("c,lam", [(0.0, 7.0), (3.0, -4.0), (-1.0, 40.0), (2.0, 2.0)])
def test_constant_closed_form_vs_integration(c, lam):
    e = Edge("e", "a", "b", 1.2, Constant(c))
    np.testing.assert_allclose(data(transfer(e, lam, force_ode=True)), data(transfer(e, lam)),
                               atol=1e-12)


def test_piecewise_constant_edge_direct():
    # an un-normalized step edge is handled piece by piece
    e = Edge("e", "a", "b", 1.0, PiecewiseConstant((0.4,), (1.0, 3.0)))
    f1, df1, g1, dg1 = constant_transfer(1.0, 7.0, 0.4)
    f2, df2, g2, dg2 = constant_transfer(3.0, 7.0, 0.6)
    ref = np.array([[f2, g2], [df2, dg2]]) @ np.array([[f1, g1], [df1, dg1]])
    np.testing.assert_allclose(transfer(e, 7.0).matrix, ref, atol=1e-13)


# ---------------------------------------------------------------------------
# identities

potentials = st.one_of(
    st.just(Zero()),
    st.floats(-5, 5).map(Constant),
    st.integers(1, 4).flatmap(lambda k: st.tuples(
        st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k),
        st.lists(st.floats(-5, 5), min_size=k + 1, max_size=k + 1))),
)


@st.composite
def edges(draw, max_length=1.5):
    length = draw(st.floats(0.1, max_length))
    pot = draw(potentials)
    if isinstance(pot, tuple):
        steps, vals = pot
        grid = np.concatenate([[0.0], np.cumsum(steps)])
        grid = tuple(grid / grid[-1] * length)
        grid = grid[:-1] + (length,)
        pot = Sampled(grid, tuple(vals))
    return Edge("e", "a", "b", length, pot)


@given(edges(), st.floats(-10, 100))
def test_wronskian_and_orientation(e, lam):
    t = transfer(e, lam)
    assert abs(t.wronskian - 1) <= 1e-10
    ok, res = reverse_consistency(e, lam)
    assert ok, res


def test_reverse_consistency_asymmetric_sampled():
    e = Edge("e", "a", "b", 1.0, Sampled((0.0, 1.0), (0.0, 1.0)))
    ok, res = reverse_consistency(e, 5.0)
    assert ok and np.all(res < 1e-9)


@given(st.floats(-5, 5), st.floats(0.1, 1.5), st.floats(-10, 100))
def test_constant_potential_reversal_symmetric(c, length, lam):
    e = Edge("e", "a", "b", length, Constant(c))
    np.testing.assert_array_equal(data(transfer(e, lam)), data(transfer(e, lam, reverse=True)))


# ---------------------------------------------------------------------------
# Dirichlet eigenvalues

@pytest.mark.parametrize("pot,length,expected", [
    (Zero(), 1.0, [PI ** 2, 4 * PI ** 2]),
    (Zero(), 0.5, [4 * PI ** 2]),
    (Constant(2.0), 1.0, [PI ** 2 + 2, 4 * PI ** 2 + 2]),
])
def test_dirichlet_examples(pot, length, expected):
    got = edge_dirichlet_eigenvalues(Edge("e", "a", "b", length, pot), (0, 45))
    np.testing.assert_allclose(got, expected, rtol=1e-11)


def test_dirichlet_window_below_spectrum():
    assert edge_dirichlet_eigenvalues(Edge("e", "a", "b", 1.0), (-5, 1)).size == 0


def test_dirichlet_window_rule():
    e = Edge("e", "a", "b", 1.0)
    np.testing.assert_allclose(edge_dirichlet_eigenvalues(e, (PI ** 2, 4 * PI ** 2)), [4 * PI ** 2])
    with pytest.raises(ValidationError):
        edge_dirichlet_eigenvalues(e, (3, 1))


@settings(max_examples=30)
@given(edges(max_length=1.2))
def test_dirichlet_roots_are_roots_and_bracketed(e):
    roots = edge_dirichlet_eigenvalues(e, (-10, 120))
    for lam in roots:
        t = transfer(e, lam)
        assert abs(t.gL) < 1e-9 * max(1.0, abs(t.dgL))
    qmin, qmax = e.potential.bounds(e.length)
    # counts stay between the comparison counts of the constant potentials qmax and qmin
    lo = sum(1 for n in range(1, 400) if -10 < (n * PI / e.length) ** 2 + qmax <= 120)
    hi = sum(1 for n in range(1, 400) if -10 < (n * PI / e.length) ** 2 + qmin <= 120)
    assert lo - 1 <= len(roots) <= hi + 1
    assert np.all(np.diff(roots) > 0)
    for n, lam in enumerate(edge_dirichlet_eigenvalues(e, (qmin - 1, 120)), start=1):
        a, b = sturm_bracket(e, n)
        assert a - 1e-10 * max(1, abs(a)) <= lam <= b + 1e-10 * max(1, abs(b))


def test_dirichlet_count_matches_roots():
    e = Edge("e", "a", "b", 0.8, Sampled((0.0, 0.3, 0.8), (1.0, -2.0, 3.0)))
    roots = edge_dirichlet_eigenvalues(e, (-10, 200))
    for k, lam in enumerate(roots):
        assert dirichlet_count(e, lam - 1e-6) == k
        assert dirichlet_count(e, lam + 1e-6) == k + 1


def test_dirichlet_sampled_matches_airy_root():
    # root of the Airy-oracle g(L) for W(x) = x, bracketed near the first mode
    ref = brentq(lambda lam: linear_transfer(0, 1, lam, 1.0)[2], PI ** 2, PI ** 2 + 1, xtol=1e-14)
    e = Edge("e", "a", "b", 1.0, Sampled((0.0, 1.0), (0.0, 1.0)))
    np.testing.assert_allclose(edge_dirichlet_eigenvalues(e, (0, 20)), [ref], rtol=1e-11)


# ---------------------------------------------------------------------------
# evaluate

def test_evaluate_examples():
    e = Edge("e", "a", "b", 1.0)
    v, d = evaluate(e, EdgeSolution(0.0, 1.0), PI ** 2, 0.5)
    assert v == pytest.approx(1 / PI, abs=1e-14) and d == pytest.approx(0.0, abs=1e-14)
    assert evaluate(e, EdgeSolution(1.0, 0.0), 3.0, 0.0) == (1.0, 0.0)
    v, d = evaluate(e, EdgeSolution(1.0, 0.0), -1.0, 1.0)
    assert v == pytest.approx(math.cosh(1), rel=1e-14)
    assert d == pytest.approx(math.sinh(1), rel=1e-14)


def test_evaluate_reverse_and_range():
    e = Edge("e", "a", "b", 1.0, Sampled((0.0, 1.0), (0.0, 1.0)))
    lam = 4.0
    fw = transfer(e, lam)
    # the forward f read from the far end is fL f_rev - dfL g_rev at x = L
    v, d = evaluate(e, EdgeSolution(fw.fL, -fw.dfL, reverse=True), lam, 1.0)
    assert v == pytest.approx(1.0, abs=1e-10) and d == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValidationError):
        evaluate(e, EdgeSolution(1.0, 0.0), lam, 1.5)


def test_transfer_in_graph_context_is_orientation_free():
    g = QuantumGraph({"a": 0.0, "b": 0.0}, [Edge("e", "a", "b", 0.9, Constant(1.0))])
    e = g.edge["e"]
    assert transfer(e, 2.0) == transfer(e.reversed(), 2.0)
