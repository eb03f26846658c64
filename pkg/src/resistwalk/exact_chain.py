"""Exact finite-chain computations for the walk: hitting and return laws.

Everything here is linear algebra on the transition matrix
P(x, y) = mu_xy / mu_x, independent of simulation.  These routines provide
the oracle side of identities such as

    P_x(tau_y < tau_x^+) = 1 / (mu_x R(x, y))
    E_x tau_x^+          = m(G) / mu_x
    E_x tau_y + E_y tau_x = m(G) R(x, y)

which the test suite checks against the resistance module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonTooLarge, NegativeTheta, SameVertex, UnknownVertex
from .graphs import WeightedGraph

MAX_HORIZON = 10**6
TAIL_EPS = 1e-14
DEGENERATE_TOL = 1e-9


@dataclass(eq=False)
class TransitionMatrix:
    """Row-stochastic transition matrix with its stationary distribution."""

    P: np.ndarray
    mu: np.ndarray
    stationary: np.ndarray  # mu / m(G)


def transition_matrix(g: WeightedGraph) -> TransitionMatrix:
    W = np.zeros((g.n, g.n))
    for u, v, w in g.edges:
        W[u, v] = W[v, u] = w
    P = W / g.mu[:, None]
    return TransitionMatrix(P=P, mu=g.mu.copy(), stationary=g.mu / g.total_mass)


def _restrict(P: np.ndarray, drop) -> tuple[np.ndarray, np.ndarray]:
    keep = np.array(sorted(set(range(P.shape[0])) - set(drop)), dtype=np.int64)
    return P[np.ix_(keep, keep)], keep


def hit_before_return_prob(g: WeightedGraph, x: int, y: int) -> float:
    """P_x(tau_y < tau_x^+): hit y strictly before returning to x.

    First-step analysis: with h(w) = P_w(tau_y < tau_x) harmonic off {x, y},
    the answer is P(x, y) + sum_w P(x, w) h(w).
    """
    g.check_vertex(x)
    g.check_vertex(y)
    if x == y:
        raise SameVertex("x and y must differ")
    P = transition_matrix(g).P
    interior = np.array([v for v in range(g.n) if v not in (x, y)], dtype=np.int64)
    prob = P[x, y]
    if interior.size:
        Q = P[np.ix_(interior, interior)]
        b = P[interior, y]
        h = np.linalg.solve(np.eye(interior.size) - Q, b)
        prob += float(P[x, interior] @ h)
    return float(prob)


def expected_hitting_times_to(g: WeightedGraph, y: int) -> np.ndarray:
    """E_x tau_y for every start x (zero at x = y), one linear solve."""
    g.check_vertex(y)
    P = transition_matrix(g).P
    Q, keep = _restrict(P, {y})
    k = np.linalg.solve(np.eye(keep.size) - Q, np.ones(keep.size))
    out = np.zeros(g.n)
    out[keep] = k
    return out


def expected_hitting_time(g: WeightedGraph, x: int, y: int) -> float:
    g.check_vertex(x)
    if x == y:
        raise SameVertex("x and y must differ")
    return float(expected_hitting_times_to(g, y)[x])


def expected_return_time(g: WeightedGraph, x: int) -> float:
    """E_x tau_x^+ = 1 + sum_w P(x, w) E_w tau_x."""
    g.check_vertex(x)
    P = transition_matrix(g).P
    k = expected_hitting_times_to(g, x)
    return float(1.0 + P[x] @ k)


@dataclass(eq=False)
class FirstPassageLaw:
    """A (possibly truncated) law on nonnegative integers.

    pmf[i] is the probability of the value offset + i; tail_mass is the
    probability beyond the last tabulated value.  Total mass is 1 up to
    floating point accumulation.
    """

    description: str
    params: dict
    offset: int
    pmf: np.ndarray
    tail_mass: float

    def survival(self, k: int) -> float:
        """P(value >= k)."""
        if k <= self.offset:
            return float(self.pmf.sum() + self.tail_mass)
        i = k - self.offset
        if i >= len(self.pmf):
            return float(self.tail_mass)
        return float(self.pmf[i:].sum() + self.tail_mass)

    def mean_truncated(self) -> float:
        ks = self.offset + np.arange(len(self.pmf))
        return float(ks @ self.pmf)

    def to_jsonable(self) -> dict:
        return {
            "type": self.description,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "offset": self.offset,
            "pmf": [float(p) for p in self.pmf],
            "tail_mass": float(self.tail_mass),
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def return_time_tail(g: WeightedGraph, x: int, horizon: int) -> FirstPassageLaw:
    """Exact law of the first return time tau_x^+ up to `horizon` steps.

    Iterates the taboo (sub-stochastic) matrix: the survival probability
    P(tau_x^+ >= k+2) is the total mass of P(x, .) Q^k restricted off x.
    Iteration exits early once the remaining mass drops below 1e-14.
    """
    g.check_vertex(x)
    if not (1 <= horizon <= MAX_HORIZON):
        raise HorizonTooLarge(f"horizon must lie in [1, {MAX_HORIZON}], got {horizon}")
    P = transition_matrix(g).P
    Q, keep = _restrict(P, {x})
    v = P[x, keep].copy()
    survival = [1.0]  # P(tau >= 1)
    mass = float(v.sum())  # P(tau >= 2)
    k = 1
    while k < horizon and mass > TAIL_EPS:
        survival.append(mass)
        v = v @ Q
        mass = float(v.sum())
        k += 1
    survival = np.array(survival)
    pmf = survival - np.append(survival[1:], mass)
    return FirstPassageLaw(
        description="return-time",
        params={"x": int(x), "horizon": int(horizon)},
        offset=1,
        pmf=pmf,
        tail_mass=mass,
    )


def return_time_laplace(g: WeightedGraph, x: int, theta: float) -> float:
    """E_x exp(-theta tau_x^+), from the exact tail law.

    The remainder beyond the truncation point K carries mass < 1e-14 (or the
    hard horizon cap was hit) and is bounded by mass * exp(-theta (K+1)),
    which is added so that theta = 0 returns exactly 1.
    """
    if theta < 0:
        raise NegativeTheta(f"theta must be nonnegative, got {theta}")
    if theta == 0.0:
        return 1.0
    g.check_vertex(x)
    P = transition_matrix(g).P
    Q, keep = _restrict(P, {x})
    v = P[x, keep].copy()
    total = 0.0
    k = 1  # pmf(1) = 0, start accumulating at k = 2
    mass = float(v.sum())
    while k < MAX_HORIZON and mass > TAIL_EPS:
        v = v @ Q
        new_mass = float(v.sum())
        pmf_k1 = mass - new_mass  # P(tau = k + 1)
        total += np.exp(-theta * (k + 1)) * pmf_k1
        mass = new_mass
        k += 1
    return float(total + mass * np.exp(-theta * (k + 1)))


def excursion_visit_law(g: WeightedGraph, x: int, y: int, kmax: int) -> FirstPassageLaw:
    """Law of N, the number of visits to y during one excursion of the walk
    from x back to x, for k = 0..kmax.

    By the Markov property the law is p * Geometric(a) glued to an atom at 0:
    p = P_x(tau_y < tau_x^+) is the chance the excursion reaches y at all and
    a = P_y(tau_x < tau_y^+) ends the y-visit run.  Both enter through
    first-step analysis, not through resistances; comparing against
    excursion_visit_law_from_resistance is a genuine two-route check.

    The local time increment eta accrued at y satisfies eta = N / mu_y; its
    first two moments are reported in params.
    """
    g.check_vertex(x)
    g.check_vertex(y)
    if x == y:
        raise SameVertex("x and y must differ")
    if kmax < 0:
        raise HorizonTooLarge("kmax must be nonnegative")
    p = hit_before_return_prob(g, x, y)
    a = hit_before_return_prob(g, y, x)
    mu_x = float(g.mu[x])
    mu_y = float(g.mu[y])
    pmf = np.zeros(kmax + 1)
    pmf[0] = 1.0 - p
    if kmax >= 1:
        ks = np.arange(1, kmax + 1)
        pmf[1:] = p * a * (1.0 - a) ** (ks - 1)
    tail = p * (1.0 - a) ** kmax
    m1 = p / a
    m2 = p * (2.0 - a) / (a * a)
    mean_eta = m1 / mu_y
    second_central = m2 / mu_y**2 - 2.0 * mean_eta / mu_x + 1.0 / mu_x**2
    return FirstPassageLaw(
        description="excursion-visits",
        params={
            "x": int(x),
            "y": int(y),
            "p_reach": p,
            "p_end": a,
            "mean_eta": mean_eta,
            "second_central_moment_eta": second_central,
        },
        offset=0,
        pmf=pmf,
        tail_mass=float(tail),
    )


def excursion_visit_law_from_resistance(
    mu_x: float, mu_y: float, R: float, kmax: int
) -> FirstPassageLaw:
    """Closed-form excursion-visit law from vertex measures and resistance.

    General form: P(N = k) = (1/(mu_x R)) (1 - 1/(mu_y R))^(k-1) (1/(mu_y R))
    for k >= 1, atom 1 - 1/(mu_x R) at zero.  When mu_y R = 1 (y hangs off x
    by a single edge carrying all of y's conductance) the law degenerates to
    two points, P(N = 1) = 1/(mu_x R) and P(N = 0) = 1 - 1/(mu_x R); the
    degenerate route is taken when |mu_y R - 1| < 1e-9.
    """
    if kmax < 0:
        raise HorizonTooLarge("kmax must be nonnegative")
    p = 1.0 / (mu_x * R)
    a = 1.0 / (mu_y * R)
    degenerate = abs(mu_y * R - 1.0) < DEGENERATE_TOL
    pmf = np.zeros(kmax + 1)
    pmf[0] = 1.0 - p
    if degenerate:
        if kmax >= 1:
            pmf[1] = p
        tail = 0.0 if kmax >= 1 else p
        route = "two-point"
    else:
        if kmax >= 1:
            ks = np.arange(1, kmax + 1)
            pmf[1:] = p * a * (1.0 - a) ** (ks - 1)
        tail = p * (1.0 - a) ** kmax
        route = "geometric"
    mean_eta = 1.0 / mu_x
    second_central = 2.0 * (1.0 - 1.0 / (mu_y * R)) * R / mu_x + 1.0 / (mu_x * mu_y) - 1.0 / mu_x**2
    return FirstPassageLaw(
        description="excursion-visits-closed-form",
        params={
            "route": route,
            "mu_x": float(mu_x),
            "mu_y": float(mu_y),
            "R": float(R),
            "mean_eta": mean_eta,
            "second_central_moment_eta": second_central,
        },
        offset=0,
        pmf=pmf,
        tail_mass=float(tail),
    )
