import math

import numpy as np
import pytest

from resistwalk import (
    FamilySpec,
    build_graph,
    effective_resistance,
    excursion_visit_law,
    excursion_visit_law_from_resistance,
    expected_hitting_time,
    expected_return_time,
    generate,
    hit_before_return_prob,
    return_time_laplace,
    return_time_tail,
    transition_matrix,
)
from resistwalk.errors import HorizonTooLarge, NegativeTheta, SameVertex


def test_transition_matrix_rows_sum_to_one(graph_set):
    for g in graph_set.values():
        P = transition_matrix(g).P
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(P >= 0)


def test_hit_before_return_frozen_path():
    # endpoint of the unit path: mu_0 = 1, R(0, 10) = 10, so the chance of
    # reaching the far end before returning is exactly 1/10
    g = generate(FamilySpec("path", 10))
    assert hit_before_return_prob(g, 0, 10) == pytest.approx(0.1, abs=1e-12)


def test_hit_before_return_identity(graph_set):
    rng = np.random.default_rng(5)
    for g in graph_set.values():
        pairs = rng.integers(0, g.n, size=(8, 2))
        for x, y in pairs:
            if x == y:
                continue
            p = hit_before_return_prob(g, int(x), int(y))
            R = effective_resistance(g, int(x), int(y))
            assert p == pytest.approx(1.0 / (g.mu[x] * R), abs=1e-10)


def test_return_time_identity(graph_set):
    for g in graph_set.values():
        for x in (0, g.n // 2, g.n - 1):
            assert expected_return_time(g, x) == pytest.approx(
                g.total_mass / g.mu[x], rel=1e-10
            )


def test_commute_time_identity(graph_set):
    rng = np.random.default_rng(7)
    for g in graph_set.values():
        pairs = rng.integers(0, g.n, size=(6, 2))
        for x, y in pairs:
            if x == y:
                continue
            commute = expected_hitting_time(g, int(x), int(y)) + expected_hitting_time(
                g, int(y), int(x)
            )
            R = effective_resistance(g, int(x), int(y))
            assert commute == pytest.approx(g.total_mass * R, rel=1e-8)


def test_same_vertex_rejected():
    g = generate(FamilySpec("path", 4))
    with pytest.raises(SameVertex):
        hit_before_return_prob(g, 1, 1)


def test_excursion_law_frozen_short_path():
    # path 0-1-2, x=0, y=1: p = 1, a = 1/2, so P(N = k) = 2^{-k} for k >= 1
    g = generate(FamilySpec("path", 2))
    law = excursion_visit_law(g, 0, 1, kmax=30)
    assert law.offset == 0
    assert law.pmf[0] == pytest.approx(0.0, abs=1e-14)
    for k in range(1, 12):
        assert law.pmf[k] == pytest.approx(2.0**-k, abs=1e-12)


def test_excursion_law_degenerate_edge():
    # single unit edge: mu_y R = 1, the visit count is deterministically 1
    g = build_graph([(0, 1, 1.0)])
    law = excursion_visit_law(g, 0, 1, kmax=8)
    assert law.pmf[1] == pytest.approx(1.0, abs=1e-14)
    assert law.survival(2) == pytest.approx(0.0, abs=1e-13)


def test_excursion_dual_routes_agree(graph_set):
    # taboo-matrix pmf vs the closed geometric form from the resistance
    rng = np.random.default_rng(11)
    for g in graph_set.values():
        pairs = rng.integers(0, g.n, size=(4, 2))
        for x, y in pairs:
            if x == y:
                continue
            law_fsa = excursion_visit_law(g, int(x), int(y), kmax=40)
            R = effective_resistance(g, int(x), int(y))
            law_res = excursion_visit_law_from_resistance(
                float(g.mu[x]), float(g.mu[y]), R, kmax=40
            )
            np.testing.assert_allclose(law_fsa.pmf, law_res.pmf, atol=1e-10)


def test_excursion_moments():
    # mean N = mu_y / mu_x and E (N/mu_y)^2 <= 2 R / mu_x
    rng = np.random.default_rng(13)
    for family, level in (("gasket", 2), ("vicsek", 1), ("carpet", 1)):
        g = generate(FamilySpec(family, level))
        pairs = rng.integers(0, g.n, size=(5, 2))
        for x, y in pairs:
            if x == y:
                continue
            x, y = int(x), int(y)
            R = effective_resistance(g, x, y)
            p = 1.0 / (g.mu[x] * R)
            a = 1.0 / (g.mu[y] * R)
            mean = p / a
            second = p * (2.0 - a) / a**2
            assert mean == pytest.approx(g.mu[y] / g.mu[x], rel=1e-10)
            assert second / g.mu[y] ** 2 <= 2.0 * R / g.mu[x] + 1e-12
            law = excursion_visit_law(g, x, y, kmax=600)
            ks = np.arange(len(law.pmf))
            assert float(ks @ law.pmf) <= mean + 1e-8


def test_return_time_tail_mass():
    g = generate(FamilySpec("gasket", 1))
    law = return_time_tail(g, 0, horizon=4000)
    total = float(law.pmf.sum() + law.tail_mass)
    assert total == pytest.approx(1.0, abs=1e-10)
    # truncated mean approaches m / mu_x from below
    assert law.mean_truncated() <= g.total_mass / g.mu[0] + 1e-9
    assert law.mean_truncated() == pytest.approx(g.total_mass / g.mu[0], rel=0.05)


def test_return_time_tail_horizon_cap():
    g = generate(FamilySpec("path", 4))
    with pytest.raises(HorizonTooLarge):
        return_time_tail(g, 0, horizon=0)


def test_return_time_laplace():
    g = generate(FamilySpec("path", 6))
    assert return_time_laplace(g, 0, 0.0) == pytest.approx(1.0, abs=1e-9)
    v1, v2 = return_time_laplace(g, 0, 0.5), return_time_laplace(g, 0, 1.0)
    assert 0 < v2 < v1 < 1
    with pytest.raises(NegativeTheta):
        return_time_laplace(g, 0, -0.1)


def test_first_passage_law_survival():
    g = generate(FamilySpec("path", 2))
    law = excursion_visit_law(g, 0, 1, kmax=20)
    # survival telescopes the pmf: P(N >= 1) = 1, P(N >= 2) = 1/2, ...
    for k in range(1, 8):
        assert law.survival(k) == pytest.approx(2.0 ** -(k - 1), abs=1e-10)
