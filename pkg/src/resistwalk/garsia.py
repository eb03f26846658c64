"""Discrete chaining bounds for the modulus of continuity of vertex functions.

The machinery follows the classical Garsia-Rodemich-Rumsey scheme adapted to
a finite metric measure space.  A profile is a triple (v, p, psi):

  v  nondecreasing volume gauge, with mu(B_d(x, r)) >= v(r) required on the
     whole range of realized radii (verified exactly, not sampled),
  p  nondecreasing distance gauge with p(0) = 0,
  psi  symmetric convex with psi(0) = 1 and psi(x) -> infinity.

With Gamma(f) = sum_{x,y} psi((f(x)-f(y)) / p(d(x,y))) mu_x mu_y (diagonal
pairs contribute psi(0) mu_x^2), every pair obeys

  |f(x) - f(y)| <= 2 sum_{i=1}^{n} p(d0 2^{i+1}) psi^{-1}(Gamma / v(d0 2^{i-1})^2)

with n = floor(log2(d(x,y)/d0)) + 1, and the sum is dominated by the integral
4 int p(4s)/s psi^{-1}(Gamma / v(s/2)^2) ds over (d0, 2 d(x,y)] or (0, 2 d(x,y)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GammaOverflow,
    InvalidProfile,
    QuadratureFailure,
    UnknownVertex,
    VolumeBoundUnverified,
)
from .graphs import WeightedGraph
from .resistance import _as_vertex_array, validate_metric

_GRID_POINTS = 64


def _call(fn, x):
    """Apply a scalar-or-vectorized callable to an array."""
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(fn(x), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(float(s))) for s in x.ravel()]).reshape(x.shape)


@dataclass(eq=False)
class GarsiaProfile:
    """A (v, p, psi) profile, structurally validated at construction.

    The constraints are sampled on a geometric grid of 64 points in
    [grid_lo, grid_hi]; psi_inv, when supplied, must be the generalized
    inverse inf{ y >= 0 : psi(y) > x } (used in place of bisection).
    """

    v: object
    p: object
    psi: object
    psi_inv: object = None
    grid_lo: float = 1e-6
    grid_hi: float = 10.0

    def __post_init__(self):
        grid = np.geomspace(self.grid_lo, self.grid_hi, _GRID_POINTS)
        vv = _call(self.v, grid)
        if np.any(np.diff(vv) < 0):
            raise InvalidProfile("v must be nondecreasing")
        if np.any(vv <= 0):
            raise InvalidProfile("v must be positive on the validation grid")
        pv = _call(self.p, grid)
        if np.any(np.diff(pv) < 0):
            raise InvalidProfile("p must be nondecreasing")
        if float(self.p(0.0)) != 0.0:
            raise InvalidProfile("p(0) must equal 0")
        if np.any(pv < 0):
            raise InvalidProfile("p must be nonnegative")
        psv = _call(self.psi, grid)
        if not np.all(np.isfinite(psv)):
            raise InvalidProfile("psi overflows on the validation grid; shrink grid_hi")
        if float(self.psi(0.0)) != 1.0:
            raise InvalidProfile("psi(0) must equal 1")
        neg = _call(self.psi, -grid)
        if np.max(np.abs(neg - psv)) > 1e-9 * np.max(psv):
            raise InvalidProfile("psi must be symmetric")
        if np.any(np.diff(psv) < 0):
            raise InvalidProfile("psi must be nondecreasing on [0, inf)")
        mids = _call(self.psi, 0.5 * (grid[:-1] + grid[1:]))
        if np.any(mids > 0.5 * (psv[:-1] + psv[1:]) * (1 + 1e-9) + 1e-12):
            raise InvalidProfile("psi must be convex")
        if psv[-1] <= psv[-len(grid) // 4]:
            raise InvalidProfile("psi must keep increasing (divergence proxy)")


def psi_inverse(profile: GarsiaProfile, x: float) -> float:
    """Generalized inverse inf{ y >= 0 : psi(y) > x }; 0 for x < psi(0)."""
    if profile.psi_inv is not None:
        return float(profile.psi_inv(x))
    if not math.isfinite(x):
        raise InvalidProfile(f"psi_inverse of non-finite value {x!r}")
    if float(profile.psi(0.0)) > x:
        return 0.0
    hi = 1.0
    while float(profile.psi(hi)) <= x:
        hi *= 2.0
        if hi > 1e154:
            raise InvalidProfile("psi does not reach the requested level; not diverging?")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(profile.psi(mid)) > x:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return hi


def _psi_inverse_array(profile: GarsiaProfile, xs: np.ndarray) -> np.ndarray:
    if profile.psi_inv is not None:
        return _call(profile.psi_inv, xs)
    return np.array([psi_inverse(profile, float(s)) for s in np.ravel(xs)]).reshape(np.shape(xs))


## Ready-made profile pieces.

def power_volume(c: float, alpha: float):
    return lambda r: c * np.asarray(r, dtype=float) ** alpha


def sqrt_gauge():
    return lambda s: np.sqrt(np.asarray(s, dtype=float))


def exp_abs_psi(c: float):
    psi = lambda y: np.exp(c * np.abs(np.asarray(y, dtype=float)))
    psi_inv = lambda x: np.maximum(np.log(np.maximum(np.asarray(x, dtype=float), 1.0)), 0.0) / c
    return psi, psi_inv


def exp_square_psi(c: float):
    psi = lambda y: np.exp(c * np.asarray(y, dtype=float) ** 2)
    psi_inv = lambda x: np.sqrt(np.maximum(np.log(np.maximum(np.asarray(x, dtype=float), 1.0)), 0.0) / c)
    return psi, psi_inv


def ball_volume_checks(mu: np.ndarray, d: np.ndarray, cluster_tol: float = 1e-9):
    """Radii and exact worst-case ball volumes for volume lower bounds.

    Returns (radii, minvols) such that "for all x and all r in [d0, diam]:
    mu(B_d(x, r)) >= v(r)" holds if and only if minvols[k] >= v(radii[k]) for
    every k, for any nondecreasing v.  Open balls B(x, r) = {y : d(x,y) < r}
    are piecewise constant in r, so it suffices to test at d0 and just above
    each realized distance; distances within cluster_tol * diam of each other
    are treated as equal to absorb floating point ties.
    """
    n = len(mu)
    off = ~np.eye(n, dtype=bool)
    vals = np.unique(d[off])
    diam = float(vals[-1])
    tol = cluster_tol * diam
    reps = [float(vals[0])]
    for vv in vals[1:]:
        if vv - reps[-1] > tol:
            reps.append(float(vv))
    d0 = reps[0]
    order = np.argsort(d, axis=1)
    rows = np.take_along_axis(d, order, axis=1)
    cum = np.cumsum(mu[order], axis=1)
    radii = [d0]
    minvols = [float(mu.min())]  # B(x, d0) = {x}
    for k in range(len(reps) - 1):
        thresh = reps[k] + 0.5 * tol
        idx = (rows <= thresh).sum(axis=1)  # per row: |{d <= reps[k]}|
        vols = cum[np.arange(n), idx - 1]
        radii.append(reps[k + 1])
        minvols.append(float(vols.min()))
    return np.array(radii), np.array(minvols)


def fit_power_volume(mu: np.ndarray, d: np.ndarray, alpha: float):
    """Largest c with mu(B_d(x, r)) >= c r^alpha on all realized radii.

    Returns (c, v); the fitted v passes verify_volume by construction."""
    radii, minvols = ball_volume_checks(mu, d)
    c = float(np.min(minvols / radii**alpha))
    return c, power_volume(c, alpha)


@dataclass(eq=False)
class MetricContext:
    """A metric on the vertices of a graph, with exact volume verification.

    Construction checks the metric axioms (unless validate=False); calling
    verify_volume(profile) checks min_x mu(B_d(x, r)) >= v(r) exactly for all
    r in [d0, diam] and registers the profile for use in garsia_bound."""

    graph: WeightedGraph
    d: np.ndarray
    validate: bool = True
    d0: float = field(init=False)
    diam: float = field(init=False)

    def __post_init__(self):
        n = self.graph.n
        if self.d.shape != (n, n):
            raise UnknownVertex(f"distance matrix shape {self.d.shape} does not match n={n}")
        if self.validate:
            validate_metric(self.d)
        off = ~np.eye(n, dtype=bool)
        self.d0 = float(self.d[off].min())
        self.diam = float(self.d[off].max())
        self._verified = set()
        self._checks = None

    def volume_checks(self):
        if self._checks is None:
            self._checks = ball_volume_checks(self.graph.mu, self.d)
        return self._checks

    def verify_volume(self, profile: GarsiaProfile) -> float:
        """Exact check of the volume lower bound; returns the worst ratio
        min ball volume / v(r) (>= 1 when the bound holds)."""
        radii, minvols = self.volume_checks()
        vvals = _call(profile.v, radii)
        ratios = minvols / vvals
        worst = float(ratios.min())
        if worst < 1.0:
            k = int(np.argmin(ratios))
            raise VolumeBoundUnverified(
                f"volume bound fails at r={float(radii[k])!r}: min ball volume "
                f"{float(minvols[k])!r} < v(r) = {float(vvals[k])!r}"
            )
        self._verified.add(id(profile))
        return worst

    def is_verified(self, profile: GarsiaProfile) -> bool:
        return id(profile) in self._verified


def gamma_functional(g: WeightedGraph, ctx: MetricContext, f, profile: GarsiaProfile) -> float:
    """Gamma(f) = sum over ordered pairs of psi(df / p(d)) mu_x mu_y.

    Diagonal pairs contribute psi(0) mu_x^2 = mu_x^2.  A non-finite psi value
    raises GammaOverflow naming the offending pair."""
    vals = _as_vertex_array(g, f)
    n = g.n
    off = ~np.eye(n, dtype=bool)
    pd = np.ones((n, n))
    pd[off] = _call(profile.p, ctx.d[off])
    ratio = np.zeros((n, n))
    ratio[off] = (vals[:, None] - vals[None, :])[off] / pd[off]
    psiv = np.ones((n, n))
    with np.errstate(over="ignore", invalid="ignore"):
        psiv[off] = _call(profile.psi, ratio[off])
    if not np.all(np.isfinite(psiv)):
        bad = np.argwhere(~np.isfinite(psiv))[0]
        raise GammaOverflow(
            f"psi overflowed at pair ({int(bad[0])}, {int(bad[1])}) "
            f"with ratio {float(ratio[bad[0], bad[1]])!r}",
            pair=(int(bad[0]), int(bad[1])),
        )
    return float(g.mu @ psiv @ g.mu)


def _require_verified(ctx: MetricContext, profile: GarsiaProfile):
    if not ctx.is_verified(profile):
        raise VolumeBoundUnverified(
            "profile volume bound not verified on this context; call ctx.verify_volume(profile)"
        )


def _chain_lengths(dmat: np.ndarray, d0: float) -> np.ndarray:
    """n(x, y) = min{ i : d0 2^i > d(x, y) } elementwise, with float fix-ups."""
    off = dmat > 0
    n = np.zeros(dmat.shape, dtype=np.int64)
    ratio = np.ones_like(dmat)
    ratio[off] = dmat[off] / d0
    n[off] = np.floor(np.log2(ratio[off])).astype(np.int64) + 1
    # guard against log2 rounding on exact powers of two
    too_small = off & (d0 * np.exp2(n.astype(float)) <= dmat)
    n[too_small] += 1
    shrinkable = off & (n > 1) & (d0 * np.exp2(n.astype(float) - 1) > dmat)
    n[shrinkable] -= 1
    # distances a hair below d0 (metric ties) still take one term
    np.maximum(n, off.astype(np.int64), out=n)
    return n


def _chain_terms(ctx: MetricContext, profile: GarsiaProfile, gamma: float, imax: int) -> np.ndarray:
    i = np.arange(1, imax + 1, dtype=float)
    pvals = _call(profile.p, ctx.d0 * np.exp2(i + 1))
    vvals = _call(profile.v, ctx.d0 * np.exp2(i - 1))
    return pvals * _psi_inverse_array(profile, gamma / vvals**2)


def garsia_bound(
    g: WeightedGraph,
    ctx: MetricContext,
    f,
    x: int,
    y: int,
    profile: GarsiaProfile,
    gamma: float | None = None,
) -> float:
    """Chaining upper bound for |f(x) - f(y)|; zero on the diagonal."""
    g.check_vertex(x)
    g.check_vertex(y)
    _require_verified(ctx, profile)
    if x == y:
        return 0.0
    if gamma is None:
        gamma = gamma_functional(g, ctx, f, profile)
    dxy = float(ctx.d[x, y])
    nterms = int(_chain_lengths(np.array([[dxy]]), ctx.d0)[0, 0])
    terms = _chain_terms(ctx, profile, gamma, nterms)
    return float(2.0 * terms.sum())


def garsia_bound_matrix(
    g: WeightedGraph,
    ctx: MetricContext,
    f,
    profile: GarsiaProfile,
    gamma: float | None = None,
) -> np.ndarray:
    """Chaining bounds for all pairs at once (shared Gamma and term table)."""
    _require_verified(ctx, profile)
    if gamma is None:
        gamma = gamma_functional(g, ctx, f, profile)
    nmat = _chain_lengths(ctx.d, ctx.d0)
    imax = int(nmat.max())
    cum = np.concatenate([[0.0], np.cumsum(_chain_terms(ctx, profile, gamma, imax))])
    return 2.0 * cum[nmat]


def _adaptive_simpson(h, a, b, tol):
    fa, fb = h(a), h(b)
    m = 0.5 * (a + b)
    fm = h(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _asr(h, a, b, fa, fm, fb, whole, tol, 40)


def _asr(h, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = h(lm), h(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if abs(err) <= 15.0 * tol or (b - a) < 1e-15 * max(abs(a), abs(b)):
        return left + right + err / 15.0
    if depth <= 0:
        raise QuadratureFailure(f"adaptive quadrature failed to converge on [{a}, {b}]")
    return _asr(h, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + _asr(
        h, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
    )


def _integrand(ctx, profile, gamma):
    def h(s):
        vs = float(profile.v(s / 2.0))
        return float(profile.p(4.0 * s)) / s * psi_inverse(profile, gamma / (vs * vs))

    return h


def _dyadic_breakpoints(d0: float, lo: float, hi: float):
    pts = []
    k = math.floor(math.log2(lo / d0)) if lo > 0 else 0
    while d0 * 2.0**k <= lo:
        k += 1
    while d0 * 2.0**k < hi:
        pts.append(d0 * 2.0**k)
        k += 1
    return pts


def _integrate_with_breakpoints(h, lo, hi, d0, tol):
    """Integral of h over [lo, hi] with panels split at dyadic d0 2^k."""
    if hi <= lo:
        return 0.0
    cuts = [lo] + _dyadic_breakpoints(d0, lo, hi) + [hi]
    coarse = [abs((b - a) * h(0.5 * (a + b))) for a, b in zip(cuts[:-1], cuts[1:])]
    scale = max(sum(coarse), 1e-300)
    total = 0.0
    for (a, b), c in zip(zip(cuts[:-1], cuts[1:]), coarse):
        total += _adaptive_simpson(h, a, b, tol * max(c, 1e-3 * scale))
    return total


def _singular_head(h, d0, tol):
    """Integral of h over (0, d0] by geometric panels, with a geometric
    remainder estimate; the integrand must be integrable at 0."""
    total = 0.0
    prev = None
    b = d0
    for _ in range(200):
        a = 0.5 * b
        panel = _adaptive_simpson(h, a, b, tol * max(abs(total), 1.0) * 1e-3)
        total += panel
        if prev is not None and panel < prev and panel < tol * max(abs(total), 1e-300):
            ratio = panel / prev
            total += panel * ratio / (1.0 - ratio)
            return total
        prev = panel
        b = a
    raise QuadratureFailure("head panels near zero did not decay; integrand not integrable?")


def garsia_integral_bound(
    g: WeightedGraph,
    ctx: MetricContext,
    f,
    x: int,
    y: int,
    profile: GarsiaProfile,
    lower: float | None = None,
    tol: float = 1e-6,
    gamma: float | None = None,
) -> float:
    """Integral form of the chaining bound:
    4 int_lower^{2 d(x,y)} p(4s)/s psi^{-1}(Gamma / v(s/2)^2) ds.

    lower defaults to d0; lower=0 is allowed when the integrand is integrable
    at the origin and always dominates both the d0 version and the chaining
    sum.  Quadrature is adaptive Simpson with panels split at s = d0 2^k."""
    g.check_vertex(x)
    g.check_vertex(y)
    _require_verified(ctx, profile)
    if x == y:
        return 0.0
    if gamma is None:
        gamma = gamma_functional(g, ctx, f, profile)
    if lower is None:
        lower = ctx.d0
    if lower < 0:
        raise QuadratureFailure("lower limit must be >= 0")
    upper = 2.0 * float(ctx.d[x, y])
    h = _integrand(ctx, profile, gamma)
    total = 0.0
    lo = lower
    if lower == 0.0:
        total += _singular_head(h, min(ctx.d0, upper), tol)
        lo = min(ctx.d0, upper)
    total += _integrate_with_breakpoints(h, lo, upper, ctx.d0, tol)
    return 4.0 * total


def garsia_integral_bound_curve(
    g: WeightedGraph,
    ctx: MetricContext,
    f,
    profile: GarsiaProfile,
    lower: float | None = None,
    tol: float = 1e-6,
    gamma: float | None = None,
) -> np.ndarray:
    """Integral bounds for all pairs at once via one cumulative sweep.

    Returns the matrix of bounds; entries share a single pass over the sorted
    distinct upper limits 2 d(x, y)."""
    _require_verified(ctx, profile)
    if gamma is None:
        gamma = gamma_functional(g, ctx, f, profile)
    if lower is None:
        lower = ctx.d0
    n = g.n
    off = ~np.eye(n, dtype=bool)
    uppers = np.unique(2.0 * ctx.d[off])
    h = _integrand(ctx, profile, gamma)
    acc = 0.0
    if lower == 0.0:
        acc += _singular_head(h, min(ctx.d0, uppers[0]), tol)
        lo = min(ctx.d0, uppers[0])
    else:
        lo = lower
    cum = {}
    for u in uppers:
        acc += _integrate_with_breakpoints(h, lo, u, ctx.d0, tol)
        cum[float(u)] = acc
        lo = u
    out = np.zeros((n, n))
    flat = 2.0 * ctx.d[off]
    out[off] = 4.0 * np.array([cum[float(u)] for u in flat])
    return out
