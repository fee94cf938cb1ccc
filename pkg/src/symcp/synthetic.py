"""Rotation-invariant synthetic trajectory benches and brute-force oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataio import TrajectorySample
from .errors import InvalidInputError
from .groups import (ActionConvention, PIVOT_LAST_OBSERVED, PIVOT_ORIGIN,
                     TWO_PI, rotate_each)
from .scores import SCORE_L2, SCORE_MAX

INV_RANDOM_ROTATION = "random-rotation"


@dataclass(frozen=True)
class SyntheticConfig:
    """Noisy straight-line walkers with uniform heading, made exactly group
    invariant either by a fresh uniform rotation per sample or by replicating
    each seed sample across a full cyclic orbit.

    ``invariance`` is ``random-rotation`` or ``orbit:<n>``; with orbits,
    ``n_samples`` counts seed samples and the output has n_samples * n rows.
    """

    n_samples: int
    t_obs: int = 8
    t_pred: int = 12
    speed_range: tuple = (0.5, 1.5)
    noise_sigma: float = 0.05
    invariance: str = INV_RANDOM_ROTATION
    seed: int = 0
    pivot: str = PIVOT_LAST_OBSERVED

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise InvalidInputError("n_samples must be >= 1")
        if int(self.t_obs) < 1 or int(self.t_pred) < 1:
            raise InvalidInputError("window lengths must be >= 1")
        lo, hi = self.speed_range
        if not (0.0 <= lo <= hi):
            raise InvalidInputError("speed_range must satisfy 0 <= lo <= hi")
        if self.noise_sigma < 0.0:
            raise InvalidInputError("noise_sigma must be >= 0")
        if self.pivot not in (PIVOT_ORIGIN, PIVOT_LAST_OBSERVED):
            raise InvalidInputError(f"unknown pivot: {self.pivot!r}")
        self.orbit_order()  # validates the invariance label

    def orbit_order(self) -> int | None:
        """Cyclic order for orbit augmentation, or None for random rotation."""
        if self.invariance == INV_RANDOM_ROTATION:
            return None
        if self.invariance.startswith("orbit:"):
            try:
                n = int(self.invariance.split(":", 1)[1])
            except ValueError:
                raise InvalidInputError(
                    f"bad invariance label: {self.invariance!r}") from None
            if n < 1:
                raise InvalidInputError("orbit order must be >= 1")
            return n
        raise InvalidInputError(f"unknown invariance: {self.invariance!r}")


def generate(config: SyntheticConfig) -> tuple[list[TrajectorySample], np.ndarray | None]:
    """Deterministic-in-seed dataset; returns (samples, orbit index map).

    The orbit map is None for random-rotation data; under orbit augmentation
    entry i names the seed sample of output row i, partitioning rows into
    consecutive groups of the orbit order.
    """
    rng = np.random.default_rng(config.seed)
    n = int(config.n_samples)
    total = config.t_obs + config.t_pred

    start = rng.normal(0.0, 4.0, (n, 2))
    heading = rng.uniform(0.0, TWO_PI, n)
    speed = rng.uniform(config.speed_range[0], config.speed_range[1], n)
    vel = speed[:, None] * np.stack([np.cos(heading), np.sin(heading)], axis=1)
    t_grid = np.arange(total, dtype=float)
    pts = (start[:, None, :] + t_grid[None, :, None] * vel[:, None, :]
           + rng.normal(0.0, config.noise_sigma, (n, total, 2)))

    pivots = pts[:, config.t_obs - 1, :] if config.pivot == PIVOT_LAST_OBSERVED \
        else np.zeros((n, 2))

    orbit_n = config.orbit_order()
    if orbit_n is None:
        theta = rng.uniform(0.0, TWO_PI, n)
        rotated = rotate_each(pts, theta, pivots)
        samples = [TrajectorySample(past=rotated[i, :config.t_obs],
                                    future=rotated[i, config.t_obs:],
                                    agent_id=i, origin_frame=0)
                   for i in range(n)]
        return samples, None

    samples = []
    orbit_index = np.repeat(np.arange(n), orbit_n)
    for j in range(orbit_n):
        angle = TWO_PI * j / orbit_n
        rotated = rotate_each(pts, np.full(n, angle), pivots)
        for i in range(n):
            samples.append((i, j, rotated[i]))
    samples.sort(key=lambda item: (item[0], item[1]))
    out = [TrajectorySample(past=window[:config.t_obs], future=window[config.t_obs:],
                            agent_id=i * orbit_n + j, origin_frame=0)
           for i, j, window in samples]
    return out, orbit_index


SHIPPED_CONFIGS = {
    "rr-default": SyntheticConfig(n_samples=1500, seed=11),
    "orbit-c4": SyntheticConfig(n_samples=375, invariance="orbit:4", seed=12),
    "orbit-c8": SyntheticConfig(n_samples=190, invariance="orbit:8", seed=13),
}


def group_by_orbit(values, orbit_index) -> list[list[float]]:
    """Regroup per-sample values into orbit-order lists using the index map."""
    values = np.asarray(values, dtype=float)
    orbit_index = np.asarray(orbit_index)
    if values.shape[0] != orbit_index.shape[0]:
        raise InvalidInputError("values and orbit index map must be paired")
    groups: dict[int, list[float]] = {}
    for value, orbit_id in zip(values, orbit_index):
        groups.setdefault(int(orbit_id), []).append(float(value))
    return [groups[key] for key in sorted(groups)]


def oracle_symmetrized_score(kind: str, base, n: int, conv: ActionConvention,
                             x, y) -> float:
    """Independent brute-force recomputation of the cyclic group-averaged score.

    Explicit per-element Python loops with their own trig and norms; shares
    nothing with the vectorized scoring path except the predictor itself.
    """
    if int(n) < 1:
        raise InvalidInputError("cyclic order must be >= 1")
    x_pts = [(float(u), float(v)) for u, v in np.asarray(x, dtype=float)]
    y_pts = [(float(u), float(v)) for u, v in np.asarray(y, dtype=float)]
    if conv.pivot == PIVOT_LAST_OBSERVED:
        px, py = x_pts[-1]
    else:
        px, py = 0.0, 0.0

    def rotated(points, angle):
        c, s = math.cos(angle), math.sin(angle)
        return [(px + c * (u - px) - s * (v - py),
                 py + s * (u - px) + c * (v - py)) for u, v in points]

    total = 0.0
    for j in range(int(n)):
        angle = -(2.0 * math.pi * j) / int(n)  # inverse element
        x_rot = rotated(x_pts, angle)
        y_rot = rotated(y_pts, angle)
        pred = base.predict_one(np.asarray(x_rot, dtype=float))
        steps = []
        for (pu, pv), (lu, lv) in zip(pred, y_rot):
            steps.append((float(pu) - lu) ** 2 + (float(pv) - lv) ** 2)
        if kind == SCORE_L2:
            value = math.sqrt(sum(steps))
        elif kind == SCORE_MAX:
            value = max(math.sqrt(s) for s in steps)
        else:
            raise InvalidInputError(f"unknown score kind: {kind!r}")
        total += value
    return total / int(n)


def oracle_orbit_stats(scores_by_orbit) -> tuple[list[float], list[float]]:
    """Per-orbit means and population variances via plain Python loops."""
    groups = list(scores_by_orbit)
    if not groups:
        raise InvalidInputError("need at least one orbit")
    sizes = {len(g) for g in groups}
    if 0 in sizes or len(sizes) != 1:
        raise InvalidInputError("orbits must be nonempty and equally sized")
    means, variances = [], []
    for group in groups:
        vals = [float(v) for v in group]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / len(vals)
        means.append(mean)
        variances.append(var)
    return means, variances


def heading_uniformity(samples) -> tuple[float, float, bool]:
    """Kuiper statistic of observed headings against the uniform circle.

    Smoke test only: returns (statistic, 1%-critical value, passed); a
    failure should be surfaced as a warning, never an error.
    """
    if len(samples) < 8:
        raise InvalidInputError("too few samples for a uniformity check")
    headings = []
    for sample in samples:
        past = np.asarray(sample.past, dtype=float)
        step = past[-1] - past[0]
        headings.append(math.atan2(step[1], step[0]) % TWO_PI)
    u = np.sort(np.asarray(headings) / TWO_PI)
    n = len(u)
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - u))
    d_minus = float(np.max(u - (i - 1) / n))
    statistic = d_plus + d_minus
    critical = 2.001 / (math.sqrt(n) + 0.155 + 0.24 / math.sqrt(n))
    return statistic, critical, statistic <= critical
