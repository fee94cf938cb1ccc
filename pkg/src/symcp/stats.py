"""Empirical orderings, risk measures, tail bounds, and volume comparisons.

Quantile convention throughout: the p-quantile of n sorted values is the
ceil(p*n)-th smallest (right-continuous inverse CDF), matching the conformal
rank rule so discrete identities hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .groups import ActionConvention, GroupSpec
from .predictors import TrajectoryPredictor, equivariantize
from .scores import SCORE_L2, score_batch, symmetrized_score_batch
from .validation import as_batches, check_alpha


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample values standing in for a distribution on the real line."""

    sorted_values: np.ndarray

    def __post_init__(self):
        vals = np.sort(np.asarray(self.sorted_values, dtype=float).ravel())
        if vals.size == 0:
            raise InvalidInputError("empirical distribution needs at least one value")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("empirical distribution values must be finite")
        object.__setattr__(self, "sorted_values", vals)

    @classmethod
    def from_values(cls, values) -> "EmpiricalDistribution":
        return cls(np.asarray(values, dtype=float))

    @property
    def n(self) -> int:
        return self.sorted_values.size

    @property
    def mean(self) -> float:
        return float(self.sorted_values.mean())

    @property
    def var(self) -> float:
        """Population variance (divisor n)."""
        return float(self.sorted_values.var())

    @property
    def support_min(self) -> float:
        return float(self.sorted_values[0])

    @property
    def support_max(self) -> float:
        return float(self.sorted_values[-1])


def empirical_quantile(dist: EmpiricalDistribution, p: float) -> float:
    """Right-continuous inverse CDF: the ceil(p*n)-th smallest value."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"quantile level must be in [0, 1], got {p}")
    idx = max(1, math.ceil(p * dist.n - 1e-9))
    return float(dist.sorted_values[min(idx, dist.n) - 1])


def upper_quantile_integral(dist: EmpiricalDistribution, p: float) -> float:
    """Exact integral of the empirical quantile function over (p, 1]."""
    p = float(p)
    if not 0.0 <= p < 1.0:
        raise InvalidInputError(f"integral lower limit must be in [0, 1), got {p}")
    n = dist.n
    hi = np.arange(1, n + 1) / n
    lo = np.maximum(np.arange(n) / n, p)
    weights = np.clip(hi - lo, 0.0, None)
    return float(weights @ dist.sorted_values)


def stop_loss(dist: EmpiricalDistribution, t):
    """Mean positive part of (value - t); vectorized over thresholds."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    excess = np.clip(dist.sorted_values[None, :] - t_arr[:, None], 0.0, None).mean(axis=1)
    return float(excess[0]) if np.ndim(t) == 0 else excess


def icx_dominates(a: EmpiricalDistribution, b: EmpiricalDistribution, grid,
                  tol=1e-12) -> tuple[bool, float]:
    """Stop-loss dominance of ``a`` by ``b`` over a threshold grid.

    ``tol`` may be a scalar or a per-threshold slack array (Monte-Carlo
    standard errors). Returns (ok, largest signed violation SL_a - SL_b).
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise InvalidInputError("threshold grid is empty")
    violation = stop_loss(a, grid) - stop_loss(b, grid)
    slack = np.broadcast_to(np.asarray(tol, dtype=float), violation.shape)
    return bool(np.all(violation <= slack)), float(violation.max())


def pooled_value_grid(a: EmpiricalDistribution, b: EmpiricalDistribution) -> np.ndarray:
    """All pooled sample values: stop-loss curves are piecewise linear with
    kinks only here, so dominance on this grid is dominance everywhere."""
    return np.unique(np.concatenate([a.sorted_values, b.sorted_values]))


def support_grid(a: EmpiricalDistribution, b: EmpiricalDistribution,
                 size: int = 64) -> np.ndarray:
    """Evenly spaced thresholds spanning the pooled support."""
    lo = min(a.support_min, b.support_min)
    hi = max(a.support_max, b.support_max)
    return np.linspace(lo, hi, int(size))


def cvar(dist: EmpiricalDistribution, alpha: float) -> float:
    """Upper-tail mean at level alpha, cross-checked against the dual form.

    The returned tail-average form integrates the empirical quantile function
    over (alpha, 1]; the dual form minimizes t + SL(t)/(1-alpha), whose
    piecewise-linear objective attains its infimum at a data point. The two
    must agree to numerical precision.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        raise InvalidInputError(f"cvar level must be in [0, 1), got {alpha}")
    tail = upper_quantile_integral(dist, alpha) / (1.0 - alpha)

    v = dist.sorted_values
    n = dist.n
    suffix = np.concatenate([np.cumsum(v[::-1])[::-1][1:], [0.0]])  # sum of values above i
    counts = n - 1 - np.arange(n)
    sl_at_values = (suffix - counts * v) / n
    dual = float(np.min(v + sl_at_values / (1.0 - alpha)))
    if abs(dual - tail) > 1e-9 * max(1.0, abs(tail)):
        raise RuntimeError(
            f"internal CVaR cross-check failed: tail form {tail} vs dual form {dual}")
    return tail


def cvar_gap_check(s_plain: EmpiricalDistribution, s_avg: EmpiricalDistribution,
                   alpha: float, tol: float = 1e-9,
                   upper_tol: float | None = None) -> tuple[float, float, bool]:
    """Gap = CVaR(plain) - CVaR(averaged) against the mean-gap/(1-alpha) bound.

    ok requires -tol <= gap <= bound + upper_tol. The bound is guaranteed for
    score pairs produced by group averaging under an invariant law; arbitrary
    stop-loss-ordered pairs can violate it (see the negative-control test).
    """
    if s_plain.n != s_avg.n:
        raise InvalidInputError("paired score sets must have equal size")
    if upper_tol is None:
        upper_tol = tol
    gap = cvar(s_plain, alpha) - cvar(s_avg, alpha)
    bound = (s_plain.mean - s_avg.mean) / (1.0 - float(alpha))
    ok = (-tol <= gap) and (gap <= bound + upper_tol)
    return gap, bound, ok


def _orbit_matrix(orbit_groups) -> np.ndarray:
    groups = list(orbit_groups)
    if not groups:
        raise InvalidInputError("need at least one orbit group")
    sizes = {len(g) for g in groups}
    if 0 in sizes:
        raise InvalidInputError("orbit groups must be nonempty")
    if len(sizes) != 1:
        raise InvalidInputError(f"orbit groups must have equal sizes, got {sorted(sizes)}")
    return np.asarray([np.asarray(g, dtype=float).ravel() for g in groups])


def variance_decomposition(orbit_groups) -> tuple[float, float, float]:
    """Split the pooled population variance into between-orbit variance and
    the mean within-orbit variance; the identity total = between + within is
    exact for equal orbit sizes."""
    arr = _orbit_matrix(orbit_groups)
    total = float(arr.var())
    between = float(arr.mean(axis=1).var())
    within_mean = float(arr.var(axis=1).mean())
    return total, between, within_mean


def within_orbit_double_sum(orbit_groups) -> float:
    """Mean within-orbit variance via the full pairwise form
    (1 / (2 |G|^2)) * sum over (g, h) of (Z_g - Z_h)^2, averaged over orbits."""
    arr = _orbit_matrix(orbit_groups)
    size = arr.shape[1]
    diffs = arr[:, :, None] - arr[:, None, :]
    return float((diffs ** 2).sum(axis=(1, 2)).mean() / (2.0 * size * size))


def lipschitz_gap_bound(base: TrajectoryPredictor, spec: GroupSpec,
                        conv: ActionConvention, samples, lipschitz: float = 1.0,
                        kind: str = SCORE_L2, tol: float = 1e-9) -> tuple[float, float, bool]:
    """Variance gap of plain vs symmetrized scores against the orbit-spread bound
    (L^2 / 2) * mean over samples and elements of ||f(x) - U_g(x)||^2.

    Exact on orbit-augmented data; pass a Monte-Carlo slack as tol otherwise.
    """
    past, future = as_batches(samples)
    eq = equivariantize(base, spec, conv)
    plain = score_batch(kind, base.predict(past), future)
    sym = symmetrized_score_batch(kind, base, spec, conv, past, future,
                                  elements=eq.elements)
    gap = float(plain.var() - sym.var())
    terms = eq.orbit_terms(past)
    spread = ((terms - base.predict(past)[None]) ** 2).sum(axis=(2, 3))
    bound = 0.5 * float(lipschitz) ** 2 * float(spread.mean())
    return gap, bound, bool(gap <= bound + tol)


def strong_convexity_lower_bound(base: TrajectoryPredictor, spec: GroupSpec,
                                 conv: ActionConvention, samples,
                                 strong_convexity: float = 2.0,
                                 tol: float = 1e-9) -> tuple[float, float, bool]:
    """Per-sample lower bound on the symmetrized squared score:

    mean_g ||U_g - y||^2 >= ||avg - y||^2 + (m/2) * mean_g ||U_g - avg||^2,

    with squared flattened-L2 displacement (strong convexity constant 2) the
    inequality is an exact identity, so it must hold for every sample.
    """
    past, future = as_batches(samples)
    eq = equivariantize(base, spec, conv)
    terms = eq.orbit_terms(past)
    averaged = terms.mean(axis=0)
    sym_sq = np.mean([(score_batch(SCORE_L2, terms[i], future)) ** 2
                      for i in range(len(terms))], axis=0)
    spread = ((terms - averaged[None]) ** 2).sum(axis=(2, 3)).mean(axis=0)
    rhs = score_batch(SCORE_L2, averaged, future) ** 2 + 0.5 * strong_convexity * spread
    ok = bool(np.all(sym_sq >= rhs - tol))
    return float(sym_sq.mean()), float(rhs.mean()), ok


def empirical_cgf(dist: EmpiricalDistribution, lam):
    """log of the sample mean of exp(lam * value), max-shifted for overflow safety."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_arr < 0.0):
        raise InvalidInputError("cumulant generating function evaluated for lam >= 0 only")
    z = lam_arr[:, None] * dist.sorted_values[None, :]
    shift = z.max(axis=1)
    out = shift + np.log(np.exp(z - shift[:, None]).mean(axis=1))
    return float(out[0]) if np.ndim(lam) == 0 else out


def chernoff_bound(dist: EmpiricalDistribution, t: float, lambda_grid) -> float:
    """Grid infimum of exp(-lam * t + cgf(lam)); lam = 0 keeps the bound <= 1."""
    grid = np.asarray(lambda_grid, dtype=float).ravel()
    if grid.size == 0 or not np.any(grid == 0.0):
        raise InvalidInputError("lambda grid must be nonempty and include 0")
    exponents = -grid * float(t) + empirical_cgf(dist, grid)
    return float(np.exp(exponents.min()))


def rate_function(dist: EmpiricalDistribution, t: float, lambda_grid) -> float:
    """Grid supremum of lam * t - cgf(lam); lam = 0 keeps the value >= 0."""
    grid = np.asarray(lambda_grid, dtype=float).ravel()
    if grid.size == 0 or not np.any(grid == 0.0):
        raise InvalidInputError("lambda grid must be nonempty and include 0")
    values = grid * float(t) - empirical_cgf(dist, grid)
    return float(values.max())


def default_lambda_grid(scale: float, size: int = 64, max_mult: float = 10.0) -> np.ndarray:
    """0 plus log-spaced points up to max_mult / scale (scale ~ score std).

    Dominance claims made on this grid are grid-relative by construction.
    """
    scale = max(float(scale), 1e-6)
    top = max_mult / scale
    return np.concatenate([[0.0], np.geomspace(top / 1e4, top, int(size))])


@dataclass(frozen=True)
class BoundReport:
    """A named closed-form bound evaluation."""

    name: str
    params: dict = field(default_factory=dict)
    value: float = 0.0


def concentration_bounds(n: int, eps: float, b: float, var: float
                         ) -> tuple[BoundReport, BoundReport, BoundReport]:
    """Closed-form Hoeffding, Bernstein, and Chebyshev-Cantelli tail bounds."""
    if int(n) < 1 or eps <= 0.0 or b <= 0.0 or var < 0.0:
        raise InvalidInputError(
            "need n >= 1, eps > 0, b > 0, var >= 0 for concentration bounds")
    n, eps, b, var = int(n), float(eps), float(b), float(var)
    hoeffding = 2.0 * math.exp(-2.0 * n * eps ** 2 / b ** 2)
    bernstein = math.exp(-n * eps ** 2 / (2.0 * var + (2.0 / 3.0) * b * eps))
    cantelli = var / (var + eps ** 2)
    params = {"n": n, "eps": eps, "b": b, "var": var}
    return (BoundReport("hoeffding", params, hoeffding),
            BoundReport("bernstein", params, bernstein),
            BoundReport("chebyshev-cantelli", params, cantelli))


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


def log_unit_ball_volume(dim: int) -> float:
    return (dim / 2.0) * math.log(math.pi) - math.lgamma(dim / 2.0 + 1.0)


@dataclass(frozen=True)
class VolumeSpec:
    """Ball-volume geometry for a score radius: Vol = kappa * radius ** dim."""

    dim: int
    kappa: float

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InvalidInputError("volume dimension must be >= 1")
        if not self.kappa > 0.0:
            raise InvalidInputError("unit-ball volume constant must be positive")
        object.__setattr__(self, "dim", int(self.dim))

    @classmethod
    def euclidean(cls, dim: int) -> "VolumeSpec":
        return cls(dim, unit_ball_volume(dim))


def set_volume(vol: VolumeSpec, radius: float) -> float:
    if radius < 0.0:
        raise InvalidInputError("radius must be nonnegative")
    return vol.kappa * float(radius) ** vol.dim


def volume_gap(s_plain: EmpiricalDistribution, s_avg: EmpiricalDistribution,
               alpha: float, vol: VolumeSpec, grid_size: int = 64,
               tol: float = 1e-9) -> tuple[float, float, bool]:
    """Mean upper-tail volume difference against its mean-gap bound.

    Averages kappa * (q_plain(p)^d - q_avg(p)^d) over a uniform p-grid inside
    (1-alpha, 1). The bound substitutes the pooled empirical support maximum
    for the top quantile, so it is support-relative rather than
    distribution-free.
    """
    alpha = check_alpha(alpha)
    if s_plain.n != s_avg.n:
        raise InvalidInputError("paired score sets must have equal size")
    ps = 1.0 - alpha + alpha * (np.arange(int(grid_size)) + 0.5) / int(grid_size)
    q_plain = np.array([empirical_quantile(s_plain, p) for p in ps])
    q_avg = np.array([empirical_quantile(s_avg, p) for p in ps])
    dvol_mean = float(np.mean(vol.kappa * (q_plain ** vol.dim - q_avg ** vol.dim)))
    q1 = max(s_plain.support_max, s_avg.support_max)
    bound = (vol.dim * vol.kappa / (1.0 - alpha)) * q1 ** (vol.dim - 1) \
        * (s_plain.mean - s_avg.mean)
    ok = (-tol <= dvol_mean) and (dvol_mean <= bound + tol)
    return dvol_mean, bound, ok


def paired_se(diffs) -> float:
    """Standard error of a mean of paired differences."""
    diffs = np.asarray(diffs, dtype=float).ravel()
    if diffs.size < 2:
        raise InvalidInputError("need at least two paired differences")
    return float(diffs.std(ddof=1) / math.sqrt(diffs.size))


def resampled_se(n: int, stat_fn, n_resamples: int = 15, seed: int = 0) -> float:
    """Standard error of a statistic estimated from disjoint subsample replicates.

    ``stat_fn`` receives an index array; the replicate spread scaled by
    1/sqrt(R) estimates the full-sample standard error for root-n statistics.
    """
    n, n_resamples = int(n), int(n_resamples)
    if n < 2 * n_resamples:
        raise InvalidInputError("too few samples for the requested resample count")
    perm = np.random.default_rng([int(seed), 314159]).permutation(n)
    chunks = np.array_split(perm, n_resamples)
    stats = np.array([float(stat_fn(chunk)) for chunk in chunks])
    return float(stats.std(ddof=1) / math.sqrt(n_resamples))
