import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resistwalk import (
    FamilySpec,
    build_graph,
    dirichlet_energy,
    distance_matrix,
    effective_resistance,
    generate,
    harmonic_potential,
    resistance_matrix,
    set_resistance,
    validate_metric,
)
from resistwalk.errors import EmptySet, OverlappingSets, SolverFailure

from test_graphs import random_connected_graphs


def test_path_is_series_law():
    g = generate(FamilySpec("path", 10))
    R = resistance_matrix(g).matrix
    idx = np.arange(g.n)
    np.testing.assert_allclose(R, np.abs(idx[:, None] - idx[None, :]), atol=1e-10)


def test_triangle_pairs():
    g = build_graph([(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
    for x, y in ((0, 1), (0, 2), (1, 2)):
        assert effective_resistance(g, x, y) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_parallel_edges_halve_resistance():
    g = build_graph([(0, 1, 1.0), (0, 1, 1.0)])
    assert effective_resistance(g, 0, 1) == pytest.approx(0.5, abs=1e-14)


def test_gasket_corner_resistance_ladder():
    # corner-to-corner resistance contracts by exactly 3/5 per level refinement
    expected = 2.0 / 3.0
    for level in range(5):
        g = generate(FamilySpec("gasket", level))
        c = g.meta["corners"]
        r = effective_resistance(g, c[0], c[1])
        assert r == pytest.approx(expected, abs=1e-9)
        expected *= 5.0 / 3.0


def test_vicsek_resistance_is_graph_distance():
    g = generate(FamilySpec("vicsek", 2))
    R = resistance_matrix(g).matrix
    np.testing.assert_allclose(R, distance_matrix(g), atol=1e-9)


def test_resistance_matrix_fields(graph_set):
    for g in graph_set.values():
        rm = resistance_matrix(g)
        off = ~np.eye(g.n, dtype=bool)
        assert rm.r_diam == pytest.approx(float(rm.matrix.max()), rel=1e-12)
        assert rm.r_min == pytest.approx(float(rm.matrix[off].min()), rel=1e-12)
        assert rm.r_min > 0
        np.testing.assert_allclose(rm.matrix, rm.matrix.T, atol=1e-12)
        assert np.all(np.diag(rm.matrix) == 0)


def test_metric_axioms_hold(graph_set):
    for g in graph_set.values():
        validate_metric(resistance_matrix(g).matrix)


def test_metric_violation_detected():
    d = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    with pytest.raises(SolverFailure):
        validate_metric(d)


def test_same_vertex_is_zero():
    g = generate(FamilySpec("path", 4))
    assert effective_resistance(g, 2, 2) == 0.0


def test_set_resistance_matches_pair():
    g = generate(FamilySpec("gasket", 2))
    c = g.meta["corners"]
    assert set_resistance(g, [c[0]], [c[1]]) == pytest.approx(
        effective_resistance(g, c[0], c[1]), rel=1e-10
    )


def test_set_resistance_monotone_in_sets():
    # growing either electrode can only lower the resistance
    g = generate(FamilySpec("carpet", 1))
    xs = np.array([g.coords[v][0] for v in g.vertices])
    left = [v for v in g.vertices if np.isclose(xs[v], xs.min())]
    right = [v for v in g.vertices if np.isclose(xs[v], xs.max())]
    full = set_resistance(g, left, right)
    assert set_resistance(g, left[:1], right) >= full - 1e-12
    with pytest.raises(EmptySet):
        set_resistance(g, [], right)
    with pytest.raises(OverlappingSets):
        set_resistance(g, left, left)


def test_harmonic_potential_and_energy():
    g = generate(FamilySpec("gasket", 2))
    c = g.meta["corners"]
    h = harmonic_potential(g, [c[0]], [c[1]])
    assert h[c[0]] == pytest.approx(0.0, abs=1e-12)
    assert h[c[1]] == pytest.approx(1.0, abs=1e-12)
    assert np.all(h >= -1e-12) and np.all(h <= 1 + 1e-12)
    R = effective_resistance(g, c[0], c[1])
    assert dirichlet_energy(g, h) == pytest.approx(1.0 / R, rel=1e-10)


def test_wired_at_most_unwired():
    g = generate(FamilySpec("carpet", 1))
    gw = generate(FamilySpec("wired_carpet", 1))
    vmap = gw.meta["vertex_map"]
    interior = [v for v in g.vertices if v not in set(g.meta["boundary"])]
    Ru = resistance_matrix(g).matrix
    Rw = resistance_matrix(gw).matrix
    for i, x in enumerate(interior[:12]):
        for y in interior[i + 1 : i + 6]:
            assert Rw[vmap[x], vmap[y]] <= Ru[x, y] + 1e-10


def test_rescaled_resistance():
    g = generate(FamilySpec("gasket", 2))
    rm = resistance_matrix(g)
    rs = rm.rescaled()
    np.testing.assert_allclose(rs.matrix, rm.matrix / rm.r_diam, rtol=1e-12)
    assert rs.matrix.max() == pytest.approx(1.0, rel=1e-12)


@given(random_connected_graphs())
@settings(max_examples=40, deadline=None)
def test_resistance_metric_property(edges):
    g = build_graph(edges)
    R = resistance_matrix(g).matrix
    validate_metric(R)
    # series upper bound: R <= resistance length of any path, here via BFS tree
    for u, v, w in g.edges:
        assert R[u, v] <= 1.0 / w + 1e-9
