"""Desk-scale studies tying the random walk statistics to their predicted
behavior on the self-similar families.

Every routine here is a pure function of (config, seed): trials draw from
counter-based streams indexed in documented loop order (level-major, then
start, then trial), so reruns are bit-exact.  Estimated tail curves carry
95% binomial confidence half-widths; cross-level comparisons are stated as
dispersion bounds on quantiles, never as convergence claims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ExcessiveCensoring,
    CapExceeded,
    InsufficientData,
    InsufficientLevels,
    InvalidProfile,
    InvariantViolation,
    RangeError,
)
from .garsia import ball_volume_checks
from .graphs import FamilySpec, WeightedGraph, generate
from .resistance import ResistanceMatrix, resistance_matrix, set_resistance
from .walk_sim import (
    RngStream,
    cover_time,
    max_scaled_difference_statistic,
    run_walk,
    sqrt_gauge_reciprocal,
    truncated_modulus_trial,
)

DEFAULT_LAMBDA_GRID = tuple(0.5 * k for k in range(13))
DEFAULT_N_TRIALS = 2000
SMALL_GRAPH_STARTS = 30  # exhaustive starts at or below this size
Z_95 = 1.959963984540054  # two-sided 95% normal quantile


def _graph_id(g: WeightedGraph) -> str:
    return f"{g.meta.get('family', 'graph')}-{g.meta.get('level', '?')}"


def _start_vertices(g: WeightedGraph) -> list[int]:
    """All vertices on small graphs; symmetry-orbit representatives else."""
    if g.n <= SMALL_GRAPH_STARTS:
        return list(range(g.n))
    return [int(v) for v in g.meta["start_reps"]]


def _wald_halfwidth(p: np.ndarray, n: int) -> np.ndarray:
    return Z_95 * np.sqrt(np.clip(p * (1.0 - p), 0.0, None) / n)


def _tail_probs(samples: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """P(sample >= lambda) on a shared sample set; exactly nonincreasing."""
    srt = np.sort(samples)
    return 1.0 - np.searchsorted(srt, lam, side="left") / len(samples)


def _fit_log_slope(lam: np.ndarray, prob: np.ndarray):
    """Least-squares slope of log(prob) against lambda where prob > 0."""
    keep = prob > 0
    if keep.sum() < 2:
        return None
    return float(np.polyfit(lam[keep], np.log(prob[keep]), 1)[0])


def _ks_pooled(a: np.ndarray, b: np.ndarray, points: int = 200):
    """KS distance between two samples on a pooled quantile grid."""
    grid = np.quantile(np.concatenate([a, b]), np.linspace(0.0, 1.0, points))
    fa = np.searchsorted(np.sort(a), grid, side="right") / len(a)
    fb = np.searchsorted(np.sort(b), grid, side="right") / len(b)
    return float(np.max(np.abs(fa - fb))), grid, fa, fb


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


@dataclass(eq=False)
class TailCurve:
    """One estimated tail curve P(statistic >= lambda) on one graph."""

    kind: str  # thm-a | thm-b | sup-localtime | equicontinuity
    graph_id: str
    lambda_grid: np.ndarray
    prob_est: np.ndarray
    ci_halfwidth: np.ndarray
    n_trials: int
    starts: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    bound: np.ndarray | None = None
    fitted_slope: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lambda_grid = np.asarray(self.lambda_grid, dtype=float)
        self.prob_est = np.asarray(self.prob_est, dtype=float)
        self.ci_halfwidth = np.asarray(self.ci_halfwidth, dtype=float)
        if np.any(np.diff(self.lambda_grid) <= 0):
            raise RangeError("lambda grid must be strictly increasing")
        if np.any((self.prob_est < 0) | (self.prob_est > 1)):
            raise InvariantViolation("tail probabilities must lie in [0, 1]")
        slack = self.ci_halfwidth[1:] + self.ci_halfwidth[:-1]
        if np.any(np.diff(self.prob_est) > slack + 1e-12):
            raise InvariantViolation("tail curve increases beyond CI slack")

    def to_jsonable(self) -> dict:
        out = {
            "kind": self.kind,
            "graph_id": self.graph_id,
            "lambda_grid": _jsonable(self.lambda_grid),
            "prob_est": _jsonable(self.prob_est),
            "ci_halfwidth": _jsonable(self.ci_halfwidth),
            "n_trials": self.n_trials,
            "starts": _jsonable(self.starts),
            "params": _jsonable(self.params),
            "extras": _jsonable(self.extras),
        }
        if self.bound is not None:
            out["bound"] = _jsonable(self.bound)
        if self.fitted_slope is not None:
            out["fitted_slope"] = float(self.fitted_slope)
        return out


@dataclass(eq=False)
class UvdReport:
    """Volume lower bounds against a gauge v at realized radii."""

    family: str
    alpha: float | None  # power exponent when v(r) = r^alpha, else None
    levels: list
    per_level: list  # dicts: level, radii, min_ball_volume, c1, c2, c3
    c1_values: list
    c2_values: list
    c1_span: float  # max/min across levels
    c2_span: float
    passed: bool

    def to_jsonable(self) -> dict:
        return _jsonable(
            {
                "family": self.family,
                "alpha": self.alpha,
                "levels": self.levels,
                "per_level": self.per_level,
                "c1_values": self.c1_values,
                "c2_values": self.c2_values,
                "c1_span": self.c1_span,
                "c2_span": self.c2_span,
                "passed": self.passed,
            }
        )


@dataclass(eq=False)
class ExponentEstimate:
    """Log-log fits: volume exponent alpha and walk exponent beta."""

    family: str
    levels: list
    alpha_hat: float
    beta_hat: float
    alpha_resid: float  # rms residual of the volume fit
    beta_resid: float
    n_volume_points: int
    n_pair_points: int

    def to_jsonable(self) -> dict:
        return _jsonable(self.__dict__)


@dataclass(eq=False)
class ScalingReport:
    """Cross-level distributional comparison of a rescaled quantity."""

    kind: str
    levels: list
    n_trials: int
    functionals: dict  # name -> {grid, cdfs per level, ks_successive, means}
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for entry in self.functionals.values():
            for ks in entry.get("ks_successive", []):
                if not (0.0 <= ks <= 1.0):
                    raise InvariantViolation("KS statistic outside [0, 1]")

    def to_jsonable(self) -> dict:
        return _jsonable(
            {
                "kind": self.kind,
                "levels": self.levels,
                "n_trials": self.n_trials,
                "functionals": self.functionals,
                "extras": self.extras,
            }
        )


@dataclass(eq=False)
class CarpetGrowthReport:
    """Growth rate of the side-to-side resistance across carpet levels."""

    levels: list
    set_resistances: list
    ratios: list
    rho_hat: float
    ratio_spread: float  # max/min of successive ratios
    wired_check_level: int | None
    wired_max_excess: float | None  # max of R_wired - R_unwired over pairs

    def to_jsonable(self) -> dict:
        return _jsonable(self.__dict__)


## Volume growth and exponents.

def check_uvd(family: str, levels, v_spec) -> UvdReport:
    """Exact ball-volume lower bounds against a volume gauge per level.

    v_spec is either a power exponent a (meaning v(r) = r^a) or a callable
    v(r).  For each level, every realized radius r in [r_0, r_diam] of the
    resistance metric gets min_x mu(B_R(x, r)) computed exactly; c1 is the
    largest constant with c1 v(r) <= that minimum everywhere, c2 the
    smallest with m <= c2 v(r_diam), and c3 the observed doubling constant
    max v(2r)/v(r).  passed requires the fitted constants to reproduce the
    inequalities on every checked radius.
    """
    if callable(v_spec):
        alpha = None
        vfun = lambda r: np.array([float(v_spec(float(s))) for s in np.atleast_1d(r)])
    else:
        alpha = float(v_spec)
        vfun = lambda r: np.atleast_1d(r) ** alpha
    levels = [int(l) for l in levels]
    if not levels:
        raise InsufficientLevels("need at least one level")
    per_level = []
    c1s, c2s = [], []
    passed = True
    for level in levels:
        g = generate(FamilySpec(family, level))
        R = resistance_matrix(g)
        radii, minvols = ball_volume_checks(g.mu, R.matrix)
        v = vfun(radii)
        if np.any(v <= 0) or not np.all(np.isfinite(v)):
            raise InvalidProfile("volume gauge must be positive and finite on realized radii")
        v_diam = float(vfun(R.r_diam)[0])
        c1 = float(np.min(minvols / v))
        c2 = float(g.total_mass / v_diam)
        c3 = float(np.max(vfun(2.0 * radii) / v))
        ok = bool(
            np.all(c1 * v <= minvols * (1 + 1e-12))
            and g.total_mass <= c2 * v_diam * (1 + 1e-12)
        )
        passed = bool(passed and ok and c1 > 0)
        per_level.append(
            {
                "level": level,
                "radii": radii,
                "min_ball_volume": minvols,
                "c1": c1,
                "c2": c2,
                "c3": c3,
                "inequalities_hold": ok,
            }
        )
        c1s.append(c1)
        c2s.append(c2)
    return UvdReport(
        family=family,
        alpha=alpha,
        levels=levels,
        per_level=per_level,
        c1_values=c1s,
        c2_values=c2s,
        c1_span=float(max(c1s) / min(c1s)),
        c2_span=float(max(c2s) / min(c2s)),
        passed=passed,
    )


def _euclidean_matrix(g: WeightedGraph) -> np.ndarray:
    c = g.coord_array()
    diff = c[:, None, :] - c[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


# length contraction ratio of each family's cell maps
_FAMILY_LENGTH_SCALE = {
    "path": 2.0,
    "gasket": 2.0,
    "vicsek": 3.0,
    "carpet": 3.0,
    "wired_carpet": 3.0,
}


def _corner_volume_points(g: WeightedGraph, rho: float):
    """Corner-ball volumes at scale-aligned radii snapped to realized values.

    A closed ball around the corner at radius diam * rho^-j contains a
    scaled copy of the graph plus a scale-independent boundary mass, so the
    volumes obey vol = C r^alpha + B exactly; snapping each radius down to
    the nearest realized corner distance keeps that structure on lattices
    whose distances miss the aligned radii.  The corner's own mass is
    removed (it is part of B anyway) to keep volumes positive-scaling.
    """
    corner = int(g.meta.get("corners", g.meta.get("endpoints"))[0])
    c = g.coord_array()
    drow = np.sqrt(((c - c[corner]) ** 2).sum(axis=1))
    realized = np.unique(drow[drow > 0])
    diam = float(realized[-1])
    rs, vols = [], []
    j = 1
    while True:
        target = diam * rho**-j
        k = np.searchsorted(realized, target * (1 + 1e-12), side="right") - 1
        if k < 0:
            break
        r = float(realized[k])
        vol = float(g.mu[drow <= r * (1 + 1e-12)].sum() - g.mu[corner])
        if vol <= 0:
            break
        if not rs or r < rs[-1]:
            rs.append(r)
            vols.append(vol)
        j += 1
    return np.array(rs), np.array(vols)


def estimate_exponents(family: str, levels) -> ExponentEstimate:
    """Exponent fits in the Euclidean embedding, pooled over levels.

    alpha_hat comes from corner-anchored ball volumes at radii aligned with
    the family's own contraction ratio: the constant boundary mass B is
    profiled out per level (vol = C r^alpha + B holds exactly there), and
    the reported slope is the pooled per-level-demeaned log-log fit of the
    corrected volumes.  beta_hat = alpha_hat + pooled demeaned slope of
    log R against log Euclidean distance over all vertex pairs.
    """
    from scipy.optimize import minimize_scalar

    levels = [int(l) for l in levels]
    if len(levels) < 2:
        raise InsufficientData("need at least two levels to pool a fit")
    rho = _FAMILY_LENGTH_SCALE[family]
    data = []
    for level in levels:
        g = generate(FamilySpec(family, level))
        rs, vols = _corner_volume_points(g, rho)
        if len(rs):
            data.append((rs, vols))
    n_vol = sum(len(rs) for rs, _ in data)
    if n_vol < 2 * len(data) + 1:
        raise InsufficientData(
            f"{n_vol} volume points cannot pin a shared exponent over "
            f"{len(data)} levels; use deeper levels"
        )

    def pooled_sse(alpha):
        tot = 0.0
        for rs, vols in data:
            A = np.stack([rs**alpha, np.ones_like(rs)], axis=1)
            coef, *_ = np.linalg.lstsq(A, vols, rcond=None)
            tot += float(np.sum((A @ coef - vols) ** 2) / np.sum(vols**2))
        return tot

    opt = minimize_scalar(pooled_sse, bounds=(0.2, 4.0), method="bounded",
                          options={"xatol": 1e-12})
    xs, ys = [], []
    for rs, vols in data:
        A = np.stack([rs**opt.x, np.ones_like(rs)], axis=1)
        coef, *_ = np.linalg.lstsq(A, vols, rcond=None)
        corrected = vols - coef[1]
        keep = corrected > 0
        if keep.sum() >= 2:
            lx, ly = np.log(rs[keep]), np.log(corrected[keep])
            xs.append(lx - lx.mean())
            ys.append(ly - ly.mean())
    if not xs:
        raise InsufficientData("background correction left no usable volume points")
    vx, vy = np.concatenate(xs), np.concatenate(ys)
    alpha_hat = float(vx @ vy / (vx @ vx))
    alpha_resid = float(np.sqrt(np.mean((vy - alpha_hat * vx) ** 2)))

    pair_x, pair_y = [], []
    for level in levels:
        g = generate(FamilySpec(family, level))
        D = _euclidean_matrix(g)
        R = resistance_matrix(g).matrix
        iu = np.triu_indices(g.n, k=1)
        lx, ly = np.log(D[iu]), np.log(R[iu])
        pair_x.append(lx - lx.mean())
        pair_y.append(ly - ly.mean())
    px, py = np.concatenate(pair_x), np.concatenate(pair_y)
    slope = float(px @ py / (px @ px))
    beta_resid = float(np.sqrt(np.mean((py - slope * px) ** 2)))
    return ExponentEstimate(
        family=family,
        levels=levels,
        alpha_hat=alpha_hat,
        beta_hat=float(alpha_hat + slope),
        alpha_resid=alpha_resid,
        beta_resid=beta_resid,
        n_volume_points=n_vol,
        n_pair_points=len(px),
    )


## Tail curves.

def _max_over_starts(kind, g, lam, per_start_samples, starts, n_trials, params, extras=None):
    """Combine per-start sample sets into the worst-case (max) tail curve."""
    lam = np.asarray(lam, dtype=float)
    probs = np.stack([_tail_probs(s, lam) for s in per_start_samples])
    idx = np.argmax(probs, axis=0)
    prob = probs[idx, np.arange(len(lam))]
    ci = _wald_halfwidth(prob, n_trials)
    ex = dict(extras or {})
    ex["per_start_prob"] = probs
    return TailCurve(
        kind=kind,
        graph_id=_graph_id(g),
        lambda_grid=lam,
        prob_est=prob,
        ci_halfwidth=ci,
        n_trials=n_trials,
        starts=[int(s) for s in starts],
        params=params,
        fitted_slope=_fit_log_slope(lam, prob),
        extras=ex,
    )


def _require_trials(n_trials: int):
    if n_trials < 100:
        raise RangeError("n_trials must be at least 100")


def tail_curve_thm_a(
    family: str,
    levels,
    T: float,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    n_trials: int = DEFAULT_N_TRIALS,
    seed: int = 0,
) -> list[TailCurve]:
    """Tail of max_{t <= T m r, x != y} r^{-1}|L_t(x) - L_t(y)| / Rt(x,y)^{1/2}.

    One curve per level, maximized over start vertices (exhaustive on small
    graphs, symmetry representatives on large ones).
    """
    _require_trials(n_trials)
    if T <= 0:
        raise RangeError("T must be positive")
    curves = []
    k = 0
    for level in levels:
        g = generate(FamilySpec(family, int(level)))
        R = resistance_matrix(g)
        inv_den = sqrt_gauge_reciprocal(R)
        steps = int(math.floor(T * g.total_mass * R.r_diam))
        starts = _start_vertices(g)
        per_start = []
        for s in starts:
            samples = np.empty(n_trials)
            for j in range(n_trials):
                samples[j] = max_scaled_difference_statistic(
                    g, inv_den, 1.0 / R.r_diam, s, steps, RngStream(seed, k)
                )
                k += 1
            per_start.append(samples)
        curves.append(
            _max_over_starts(
                "thm-a", g, lambda_grid, per_start, starts, n_trials,
                params={"T": float(T), "steps": steps, "seed": seed},
            )
        )
    return curves


def tail_curve_thm_b(
    family: str,
    levels,
    L_trunc: float,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    n_trials: int = DEFAULT_N_TRIALS,
    seed: int = 0,
    step_cap_factor: float = 200.0,
) -> list[TailCurve]:
    """Tail of the L-truncated modulus sup_t max_pairs |tL(x) - tL(y)| / Rt^{1/2}
    with tL = min(L, L_t / r), against the closed-form bound 2 e^{1/2 - l^2/8L}.

    Trials stop at saturation (every vertex truncated), which freezes the
    statistic exactly; the step cap step_cap_factor * L * m * r only guards
    against runaways and the fraction it censors is reported.
    """
    _require_trials(n_trials)
    if L_trunc < 1:
        raise RangeError("truncation level must be >= 1")
    lam = np.asarray(lambda_grid, dtype=float)
    bound = 2.0 * np.exp(0.5 - lam**2 / (8.0 * L_trunc))
    curves = []
    k = 0
    for level in levels:
        g = generate(FamilySpec(family, int(level)))
        R = resistance_matrix(g)
        inv_den = sqrt_gauge_reciprocal(R)
        cap = int(math.ceil(step_cap_factor * L_trunc * g.total_mass * R.r_diam))
        starts = _start_vertices(g)
        per_start = []
        unsat = 0
        for s in starts:
            samples = np.empty(n_trials)
            for j in range(n_trials):
                trial = truncated_modulus_trial(
                    g, R, s, L_trunc, cap, RngStream(seed, k), inv_den=inv_den
                )
                samples[j] = trial.statistic
                unsat += not trial.saturated
                k += 1
            per_start.append(samples)
        curve = _max_over_starts(
            "thm-b", g, lam, per_start, starts, n_trials,
            params={"L": float(L_trunc), "step_cap": cap, "seed": seed},
            extras={"unsaturated_fraction": unsat / (len(starts) * n_trials)},
        )
        curve.bound = bound.copy()
        curves.append(curve)
    return curves


def sup_local_time_tail(
    family: str,
    levels,
    T: float,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    n_trials: int = DEFAULT_N_TRIALS,
    seed: int = 0,
) -> list[TailCurve]:
    """Tail of max_x r^{-1} L_{T m r}(x).

    The occupation identity pins sum_x L_t(x) mu_x = t, so the statistic is
    at least T deterministically; tails beyond that measure concentration.
    """
    _require_trials(n_trials)
    if T <= 0:
        raise RangeError("T must be positive")
    curves = []
    k = 0
    for level in levels:
        g = generate(FamilySpec(family, int(level)))
        R = resistance_matrix(g)
        steps = int(math.floor(T * g.total_mass * R.r_diam))
        inv_mu_r = 1.0 / (g.mu * R.r_diam)
        starts = _start_vertices(g)
        per_start = []
        for s in starts:
            samples = np.empty(n_trials)
            for j in range(n_trials):
                fld = run_walk(g, s, steps, RngStream(seed, k), retain_trajectory=False)
                samples[j] = float(np.max(fld.counts * inv_mu_r))
                k += 1
            per_start.append(samples)
        curves.append(
            _max_over_starts(
                "sup-localtime", g, lambda_grid, per_start, starts, n_trials,
                params={"T": float(T), "steps": steps, "seed": seed},
            )
        )
    return curves


EQUICONTINUITY_HOLDER = math.log(5.0 / 3.0) / (2.0 * math.log(2.0))


def modulus_equicontinuity_gasket(
    levels,
    T: float,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    n_trials: int = DEFAULT_N_TRIALS,
    seed: int = 0,
) -> list[TailCurve]:
    """Tail of (3/5)^i max_{t <= 5^i T} |dL| / (|x-y|^H (1 + ln 1/|x-y|)^{1/2})
    on gasket level i, |x-y| Euclidean, H = ln(5/3)/(2 ln 2), corner start.

    The per-trial statistic is retained, so each curve also reports its 99th
    percentile; across levels those percentiles should stay in a tight band.
    """
    _require_trials(n_trials)
    if T <= 0:
        raise RangeError("T must be positive")
    curves = []
    k = 0
    for level in levels:
        level = int(level)
        g = generate(FamilySpec("gasket", level))
        D = _euclidean_matrix(g)
        off = ~np.eye(g.n, dtype=bool)
        den = np.zeros_like(D)
        den[off] = D[off] ** EQUICONTINUITY_HOLDER * np.sqrt(1.0 + np.log(1.0 / D[off]))
        inv_den = np.zeros_like(D)
        inv_den[off] = 1.0 / den[off]
        steps = int(math.floor(5.0**level * T))
        scale = (3.0 / 5.0) ** level
        start = int(g.meta["corners"][0])
        samples = np.empty(n_trials)
        for j in range(n_trials):
            samples[j] = max_scaled_difference_statistic(
                g, inv_den, scale, start, steps, RngStream(seed, k)
            )
            k += 1
        curves.append(
            _max_over_starts(
                "equicontinuity", g, lambda_grid, [samples], [start], n_trials,
                params={"T": float(T), "steps": steps, "seed": seed,
                        "holder_exponent": EQUICONTINUITY_HOLDER},
                extras={"p99": float(np.percentile(samples, 99.0))},
            )
        )
    return curves


## Distributional scaling studies on the gasket.

def local_time_scaling(
    levels,
    t_values=(1.0,),
    n_trials: int = DEFAULT_N_TRIALS,
    seed: int = 0,
) -> ScalingReport:
    """Distributions of functionals of the rescaled field 6 (3/5)^i L_{5^i t}
    from matched corner starts on gasket levels i.

    Functionals per (t, trial): the field value at the starting corner, its
    max over vertices, and the occupation average 5^{-i} sum f L mu with f
    the Euclidean x-coordinate.  The exact identity 5^{-i} sum L mu =
    5^{-i} floor(5^i t) is asserted on every trial.  Successive-level KS
    statistics are computed on pooled 200-point grids.
    """
    _require_trials(n_trials)
    levels = [int(l) for l in levels]
    if len(levels) < 2:
        raise InsufficientLevels("need at least two levels to compare")
    names = ["corner_value", "max_value", "occupation_xcoord"]
    samples = {(nm, t): {} for nm in names for t in t_values}
    k = 0
    for level in levels:
        g = generate(FamilySpec("gasket", level))
        start = int(g.meta["corners"][0])
        xcoord = g.coord_array()[:, 0]
        inv_mu = 1.0 / g.mu
        norm = 6.0 * (3.0 / 5.0) ** level
        occ_norm = 5.0**-level
        step_counts = {t: int(math.floor(5.0**level * t)) for t in t_values}
        max_steps = max(step_counts.values())
        store = {(nm, t): np.empty(n_trials) for nm in names for t in t_values}
        for j in range(n_trials):
            fld = run_walk(g, start, max_steps, RngStream(seed, k), retain_trajectory=True)
            k += 1
            for t in t_values:
                st = step_counts[t]
                counts = np.bincount(fld.trajectory[:st], minlength=g.n)
                if int(counts.sum()) != st:
                    raise InvariantViolation("occupation identity failed on a trial")
                lt = counts * inv_mu
                store[("corner_value", t)][j] = norm * lt[start]
                store[("max_value", t)][j] = norm * float(lt.max())
                store[("occupation_xcoord", t)][j] = occ_norm * float(xcoord @ counts)
        for key, arr in store.items():
            samples[key][level] = arr
    functionals = {}
    for (nm, t), by_level in samples.items():
        entry = {"t": float(t), "levels": levels, "means": [], "ks_successive": [], "cdf": {}}
        for level in levels:
            entry["means"].append(float(by_level[level].mean()))
        for a, b in zip(levels[:-1], levels[1:]):
            ks, grid, fa, fb = _ks_pooled(by_level[a], by_level[b])
            entry["ks_successive"].append(ks)
        # one pooled grid across all levels for the report CDFs
        pooled = np.concatenate([by_level[l] for l in levels])
        grid = np.quantile(pooled, np.linspace(0.0, 1.0, 200))
        entry["grid"] = grid
        for level in levels:
            srt = np.sort(by_level[level])
            entry["cdf"][level] = np.searchsorted(srt, grid, side="right") / len(srt)
        functionals[f"{nm}@t={t:g}"] = entry
    return ScalingReport(
        kind="local-time",
        levels=levels,
        n_trials=n_trials,
        functionals=functionals,
        extras={"normalization": "6*(3/5)^i, horizon 5^i t", "seed": seed},
    )


def cover_time_scaling(
    levels,
    n_trials: int = 1000,
    seed: int = 0,
    cap_factor: float = 1000.0,
    max_censored_fraction: float = 0.01,
) -> ScalingReport:
    """Distributions of 5^{-i} tau_cov from corner starts on gasket levels i.

    Samples exceeding cap_factor * m * r * (1 + ln n) steps are right-censored
    at the cap; more than max_censored_fraction of them fails the run.  The
    identity tau_cov_tilde = tau_cov + 1 is asserted on every finished sample.
    """
    _require_trials(n_trials)
    levels = [int(l) for l in levels]
    if len(levels) < 2:
        raise InsufficientLevels("need at least two levels to compare")
    by_level, censored, caps = {}, [], []
    k = 0
    for level in levels:
        g = generate(FamilySpec("gasket", level))
        R = resistance_matrix(g)
        start = int(g.meta["corners"][0])
        cap = int(cap_factor * g.total_mass * R.r_diam * (1.0 + math.log(g.n)))
        caps.append(cap)
        scalefac = 5.0**-level
        vals = np.empty(n_trials)
        ncens = 0
        for j in range(n_trials):
            try:
                samp = cover_time(g, start, RngStream(seed, k), cap)
                if samp.tau_cov_tilde != samp.tau_cov + 1:
                    raise InvariantViolation("tau_cov_tilde != tau_cov + 1")
                vals[j] = scalefac * samp.tau_cov
            except CapExceeded:
                vals[j] = scalefac * cap
                ncens += 1
            k += 1
        frac = ncens / n_trials
        if frac > max_censored_fraction:
            raise ExcessiveCensoring(
                f"level {level}: {frac:.2%} of cover times censored at cap {cap}"
            )
        by_level[level] = vals
        censored.append(ncens)
    entry = {"levels": levels, "means": [], "ks_successive": [], "cdf": {}}
    for level in levels:
        entry["means"].append(float(by_level[level].mean()))
    for a, b in zip(levels[:-1], levels[1:]):
        ks, _, _, _ = _ks_pooled(by_level[a], by_level[b])
        entry["ks_successive"].append(ks)
    pooled = np.concatenate([by_level[l] for l in levels])
    grid = np.quantile(pooled, np.linspace(0.0, 1.0, 200))
    entry["grid"] = grid
    for level in levels:
        srt = np.sort(by_level[level])
        entry["cdf"][level] = np.searchsorted(srt, grid, side="right") / len(srt)
    return ScalingReport(
        kind="cover-time",
        levels=levels,
        n_trials=n_trials,
        functionals={"rescaled_cover_time": entry},
        extras={"censored_per_level": censored, "caps": caps, "seed": seed},
    )


## Carpet resistance growth.

def _side_sets(g: WeightedGraph):
    xs = g.coord_array()[:, 0]
    lo, hi = xs.min(), xs.max()
    left = [int(i) for i in np.flatnonzero(np.isclose(xs, lo, rtol=0, atol=1e-12))]
    right = [int(i) for i in np.flatnonzero(np.isclose(xs, hi, rtol=0, atol=1e-12))]
    return left, right


def carpet_rho_estimate(levels, wired_check_level: int | None = 1) -> CarpetGrowthReport:
    """Growth rate of the left-to-right set resistance across carpet levels.

    rho_hat is the geometric mean of successive resistance ratios on the
    plain (unwired) carpets; the wired variant only enters the monotonicity
    cross-check R_wired <= R_unwired on shared vertices.  Raises
    InvariantViolation if the estimated growth rate is not > 1.
    """
    levels = sorted(int(l) for l in levels)
    if len(levels) < 2:
        raise InsufficientLevels("need at least two carpet levels for a ratio")
    res = []
    for level in levels:
        g = generate(FamilySpec("carpet", level))
        left, right = _side_sets(g)
        res.append(float(set_resistance(g, left, right)))
    ratios = [res[i + 1] / res[i] for i in range(len(res) - 1)]
    rho_hat = float(math.exp(np.mean(np.log(ratios))))
    if rho_hat <= 1.0:
        raise InvariantViolation(f"resistance growth rate {rho_hat!r} is not > 1")
    wmax = None
    if wired_check_level is not None:
        wmax = _wired_vs_unwired_excess(int(wired_check_level))
    return CarpetGrowthReport(
        levels=levels,
        set_resistances=res,
        ratios=ratios,
        rho_hat=rho_hat,
        ratio_spread=float(max(ratios) / min(ratios)),
        wired_check_level=wired_check_level,
        wired_max_excess=wmax,
    )


def _wired_vs_unwired_excess(level: int) -> float:
    """max over shared vertex pairs of R_wired - R_unwired (should be <= 0)."""
    g = generate(FamilySpec("carpet", level))
    gw = generate(FamilySpec("wired_carpet", level))
    vmap = gw.meta["vertex_map"]
    R = resistance_matrix(g).matrix
    Rw = resistance_matrix(gw).matrix
    boundary = set(g.meta["boundary"])
    interior = [v for v in range(g.n) if v not in boundary]
    worst = -math.inf
    for a_i, u in enumerate(interior):
        for v in interior[a_i + 1 :]:
            worst = max(worst, Rw[vmap[u], vmap[v]] - R[u, v])
    return float(worst)
