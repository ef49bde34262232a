import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_girth, to_networkx
from qtree.aomoto import best_index, point_spectrum
from qtree.compact import eigenvalues_in_window
from qtree.covers import (MAX_COVER_EDGES, CoverGraph, VoltageAssignment, build_cover,
                          convergence_csv, convergence_experiment, counting_below,
                          cover_multiplicity, cover_multiplicity_check, cumulative_bounds,
                          dos_bounds_check, girth, perturb_experiment, random_cover_with_girth,
                          segment_bounds, weyl_check)
from qtree.errors import CapError, NumericError, ValidationError
from qtree.graph import INF, Constant, Edge, QuantumGraph, dumps, graph_to_dict, load_fixture

PI = math.pi
PI2 = PI ** 2


def triangle():
    return QuantumGraph(dict.fromkeys("abc", 0.0),
                        [Edge("ab", "a", "b", 1.0), Edge("bc", "b", "c", 1.0),
                         Edge("ca", "c", "a", 1.0)])


def star():
    return QuantumGraph({"o": 0.0, "x": 0.0, "y": INF, "z": 1.0},
                        [Edge("ox", "o", "x", 1.0), Edge("oy", "o", "y", 0.5),
                         Edge("oz", "o", "z", 0.7)])


# ---------------------------------------------------------------------------
# construction

def test_voltage_validation():
    with pytest.raises(ValidationError):
        VoltageAssignment(0, {})
    with pytest.raises(ValidationError):
        VoltageAssignment(2, {"e": (0, 0)})
    va = VoltageAssignment(3, {"e": (2, 0, 1)})
    assert va.inverse("e") == (1, 2, 0)


def test_missing_voltage():
    with pytest.raises(ValidationError):
        build_cover(triangle(), VoltageAssignment(2, {"ab": (1, 0)}))


def test_one_sheet_is_isomorphic(fig2):
    cg = build_cover(fig2, VoltageAssignment(1, {}))
    assert nx.is_isomorphic(to_networkx(cg.cover), to_networkx(fig2))
    np.testing.assert_allclose([p.lam for p in eigenvalues_in_window(cg.cover, (0, 45))],
                               [p.lam for p in eigenvalues_in_window(fig2, (0, 45))], rtol=1e-10)


def test_triangle_double_cover_is_hexagon():
    cg = build_cover(triangle(), VoltageAssignment(2, {"ab": (1, 0), "bc": (0, 1), "ca": (0, 1)}))
    G = nx.Graph(to_networkx(cg.cover))
    assert nx.is_isomorphic(G, nx.cycle_graph(6))
    assert girth(cg) == 6 == brute_girth(cg.cover)


def test_k5_three_cover():
    cg = random_cover_with_girth(load_fixture("k5"), 3, seed=42)
    assert len(cg.cover.vertices) == 15 and len(cg.cover.edges) == 30
    assert cg.n == 3
    for v in cg.cover.vertices:
        assert cg.cover.degree(v) == 4


def test_cover_preserves_data():
    g = QuantumGraph({"a": 0.5, "b": INF, "c": -1.0},
                     [Edge("ab", "a", "b", 0.4, Constant(2.0)), Edge("ac", "a", "c", 1.1)])
    cg = random_cover_with_girth(g, 4, seed=3)
    for v in cg.cover.vertices:
        assert cg.cover.alpha[v] == g.alpha[cg.fiber_map[v]]
    for e in cg.cover.edges:
        be = g.edge[cg.fiber_map[e.id]]
        assert (e.length, e.potential) == (be.length, be.potential)


# ---------------------------------------------------------------------------
# girth

@pytest.mark.parametrize("name", ["fig2", "k5", "cycle", "lollipop", "interval"])
def test_girth_fixtures_match_networkx(name):
    g = load_fixture(name)
    assert girth(g) == brute_girth(g)


def test_girth_simple_cases():
    assert girth(triangle()) == 3
    assert girth(star()) == INF
    loop = QuantumGraph({"a": 0.0}, [Edge("l", "a", "a", 1.0)])
    assert girth(loop) == 1
    par = QuantumGraph({"a": 0.0, "b": 0.0}, [Edge("p", "a", "b", 1.0), Edge("q", "a", "b", 2.0)])
    assert girth(par) == 2


@settings(max_examples=40)
@given(st.integers(1, 4), st.integers(0, 2 ** 31 - 1), st.sampled_from(["fig2", "k5", "lollipop"]))
def test_cover_girth_properties(n, seed, name):
    g = load_fixture(name)
    cg = random_cover_with_girth(g, n, seed=seed)
    gi = girth(cg)
    assert gi == brute_girth(cg.cover)
    assert gi >= girth(g)
    # every cycle of the cover projects to a closed walk in the base
    G = nx.Graph(to_networkx(cg.cover))
    for cyc in nx.cycle_basis(G):
        proj = [cg.fiber_map[v] for v in cyc]
        for x, y in zip(proj, proj[1:] + proj[:1]):
            assert any({e.tail, e.head} == {x, y} for e in g.edges)


def test_girth_seven_is_out_of_reach():
    # all 2^3 voltages on the triangle: girth 3 or 6, never more
    g = triangle()
    seen = set()
    for bits in itertools.product([(0, 1), (1, 0)], repeat=3):
        cg = build_cover(g, VoltageAssignment(2, dict(zip(["ab", "bc", "ca"], bits))))
        seen.add(brute_girth(cg.cover))
    assert seen == {3, 6}
    assert girth(random_cover_with_girth(g, 2, 6, seed=0)) == 6
    with pytest.raises(NumericError, match="best girth 6"):
        random_cover_with_girth(g, 2, 7, seed=0, max_tries=50)


def test_seeded_cover_reproducible(k5):
    a = random_cover_with_girth(k5, 6, 5, seed=11, max_tries=5000)
    b = random_cover_with_girth(k5, 6, 5, seed=11, max_tries=5000)
    assert girth(a) >= 5
    assert a.voltage.perm == b.voltage.perm
    assert dumps(graph_to_dict(a.cover)) == dumps(graph_to_dict(b.cover))


def test_cover_cap(k5):
    assert MAX_COVER_EDGES == 200
    with pytest.raises(CapError):
        random_cover_with_girth(k5, 21)
    random_cover_with_girth(k5, 20)


# ---------------------------------------------------------------------------
# multiplicities

def test_fig2_three_cover_multiplicity(fig2):
    rep = best_index(fig2, PI2)
    for seed in range(3):
        cg = random_cover_with_girth(fig2, 3, seed=seed)
        assert cover_multiplicity(cg, PI2) >= 3
        assert cover_multiplicity_check(fig2, rep, cg)


@pytest.mark.parametrize("name,window", [("fig2", (0, 45)), ("lollipop", (0, 45)),
                                         ("k5", (0, 3)), ("interval", (0, 45))])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_cover_multiplicity_all_atoms(name, window, n):
    g = load_fixture(name)
    cg = random_cover_with_girth(g, n, seed=n)
    for rep in point_spectrum(g, window):
        assert cover_multiplicity_check(g, rep, cg)


def test_cover_multiplicity_vacuous(fig2):
    cg = random_cover_with_girth(fig2, 2)
    assert cover_multiplicity_check(fig2, None, cg)
    with pytest.raises(ValidationError):
        cover_multiplicity_check(load_fixture("k5"), None, cg)


# ---------------------------------------------------------------------------
# density-of-states bounds

def test_segment_upper_bound_zero_potential(fig2):
    a, b = 1.0, 45.0
    L = 17 / 6
    expected = L * (math.sqrt(b) - math.sqrt(a)) / (PI * L) + (5 + 5) / L
    assert len(fig2.interior) == 5
    assert segment_bounds(fig2, a, b)[1] == pytest.approx(expected, rel=1e-14)


def test_bounds_validation(fig2):
    with pytest.raises(ValidationError):
        segment_bounds(fig2, 0.0, 1.0)
    with pytest.raises(ValidationError):
        cumulative_bounds(fig2, 0.0)
    assert not dos_bounds_check(fig2, (0, 45)).applicable
    g = QuantumGraph({"a": 0.0, "b": 0.0}, [Edge("e", "a", "b", 1.0, Constant(5.0))])
    assert not dos_bounds_check(g, (4, 45)).applicable


def test_dos_fig2_atoms(fig2):
    rep = dos_bounds_check(fig2, (1, 45), atoms=point_spectrum(fig2, (1, 45)))
    assert rep.ok
    assert rep.checks[0][2] == pytest.approx(6 / 17, abs=1e-12)


def test_dos_empty_atoms(fig2):
    rep = dos_bounds_check(fig2, (1, 45))
    assert rep.ok and rep.checks[0][2] == 0.0
    assert rep.to_json()["ok"] is True


@pytest.mark.parametrize("name", ["fig2", "k5", "cycle", "lollipop", "interval"])
def test_dos_covers(name):
    g = load_fixture(name)
    covers = [random_cover_with_girth(g, n, seed=n) for n in (1, 2, 3)]
    rep = dos_bounds_check(g, (1, 100), covers=covers)
    assert rep.ok, rep.to_json()


def test_dos_rejects_non_cover(fig2, k5):
    with pytest.raises(ValidationError):
        dos_bounds_check(fig2, (1, 45), covers=[k5])


def test_counting_below_interval(interval):
    assert counting_below(interval, PI2 - 1e-3) == 0
    assert counting_below(interval, PI2) == 1
    assert counting_below(interval, 4 * PI2 + 1e-3) == 2


@pytest.mark.parametrize("name", ["fig2", "k5", "cycle", "lollipop", "interval"])
@pytest.mark.parametrize("x", [100.0, 400.0])
def test_weyl(name, x):
    ratio, slack, ok = weyl_check(load_fixture(name), x)
    assert ok and abs(ratio - 1) <= slack


def test_weyl_needs_zero_potential():
    g = QuantumGraph({"a": 0.0, "b": 0.0}, [Edge("e", "a", "b", 1.0, Constant(1.0))])
    with pytest.raises(ValidationError):
        weyl_check(g, 10.0)
    with pytest.raises(ValidationError):
        weyl_check(load_fixture("fig2"), 0.0)


# ---------------------------------------------------------------------------
# experiments

def test_convergence_fig2(fig2):
    rows = convergence_experiment(fig2, (0, 45), [1, 2, 3], seed=5)
    assert [r["n"] for r in rows] == [1, 2, 3]
    for r in rows:
        assert r["mass"] >= 6 / 17 - 1e-12
        assert r["engine_mass"] == pytest.approx(6 / 17)
    text = convergence_csv(rows)
    assert text.splitlines()[0] == "n,girth,lambda,mass,engine_mass"
    assert len(text.splitlines()) == 4


def test_convergence_tree_is_constant():
    g = star()
    rows = convergence_experiment(g, (0, 100), [1, 2, 3])
    assert rows
    by_lam = {}
    for r in rows:
        by_lam.setdefault(round(r["lambda"], 8), []).append(r["mass"])
    for masses in by_lam.values():
        np.testing.assert_allclose(masses, masses[0], rtol=1e-12)


def test_convergence_cycle_has_no_rows(cycle):
    assert convergence_experiment(cycle, (0, 100), [1, 2]) == []


def test_convergence_validation(fig2):
    with pytest.raises(ValidationError):
        convergence_experiment(fig2, (0, 45), [1, 2], girth_targets=[3])


def test_perturb_zero_trials(k5):
    rep = perturb_experiment(k5, 0.01, 0, (0, 45))
    assert rep == {"trials": 0, "empty": 0, "empty_fraction": None, "atoms": []}


def test_perturb_preconditions(k5, interval):
    with pytest.raises(ValidationError):
        perturb_experiment(interval, 0.01, 1, (0, 45))
    with pytest.raises(ValidationError):
        perturb_experiment(k5, 0.0, 1, (0, 45))
    with pytest.raises(ValidationError):
        perturb_experiment(k5, 0.01, -1, (0, 45))
    g = QuantumGraph(dict.fromkeys("abc", 0.0),
                     [Edge("ab", "a", "b", 1.0, Constant(1.0)), Edge("bc", "b", "c", 1.0),
                      Edge("ca", "c", "a", 1.0)])
    with pytest.raises(ValidationError):
        perturb_experiment(g, 0.01, 1, (0, 45))
    g = QuantumGraph({"a": INF, "b": 0.0, "c": 0.0},
                     [Edge("ab", "a", "b", 1.0), Edge("bc", "b", "c", 1.0),
                      Edge("ca", "c", "a", 1.0)])
    with pytest.raises(ValidationError):
        perturb_experiment(g, 0.01, 1, (0, 45))


def test_perturb_thread_invariance(k5, monkeypatch):
    one = perturb_experiment(k5, 0.01, 3, (0, 5), seed=2)
    monkeypatch.setenv("QTS_THREADS", "3")
    three = perturb_experiment(k5, 0.01, 3, (0, 5), seed=2)
    assert one == three
    monkeypatch.setenv("QTS_THREADS", "x")
    with pytest.raises(ValidationError):
        perturb_experiment(k5, 0.01, 1, (0, 5))


def test_cover_graph_type(fig2):
    assert isinstance(random_cover_with_girth(fig2, 2), CoverGraph)
