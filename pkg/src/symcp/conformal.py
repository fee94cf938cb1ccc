"""Split conformal calibration, prediction sets, and coverage evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .groups import (GroupElement, PIVOT_LAST_OBSERVED, apply_input_action,
                     rotate_points)
from .predictors import EquivariantizedPredictor, TrajectoryPredictor
from .scores import (MODE_PLAIN, MODE_SYMMETRIZED, PROV_EQUIVARIANTIZED,
                     PROV_PLAIN, PROV_SYMMETRIZED, SCORE_L2, ScoreSet,
                     check_score_kind, score_batch, symmetrized_score_batch)
from .validation import as_batches, check_alpha, check_trajectory


@dataclass(frozen=True)
class CalibrationResult:
    """Order-statistic calibration: k = ceil((m+1)(1-alpha)), q = k-th smallest.

    When k exceeds m the conformal set is all of label space; that case is
    flagged through an infinite quantile rather than an exception so sweeps
    over small calibration sets can proceed.
    """

    alpha: float
    m: int
    k: int
    q: float
    provenance: str = PROV_PLAIN

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.q)


def conformal_rank(m: int, alpha: float) -> int:
    # the 1e-9 guard keeps ceil stable when (m+1)(1-alpha) is an exact integer
    return max(1, math.ceil((m + 1) * (1.0 - alpha) - 1e-9))


def calibrate(scores, alpha: float, provenance: str | None = None) -> CalibrationResult:
    """Conservative (non-randomized) split conformal quantile of the scores."""
    alpha = check_alpha(alpha)
    if isinstance(scores, ScoreSet):
        values = scores.values
        if provenance is None:
            provenance = scores.provenance
    else:
        values = np.asarray(scores, dtype=float).ravel()
        if provenance is None:
            provenance = PROV_PLAIN
    m = values.size
    if m == 0:
        raise InvalidInputError("cannot calibrate on an empty score set")
    k = conformal_rank(m, alpha)
    q = float(np.partition(values, k - 1)[k - 1]) if k <= m else math.inf
    return CalibrationResult(alpha=alpha, m=m, k=k, q=q, provenance=provenance)


@dataclass(frozen=True)
class ConformalSet:
    """Closed score ball around a predicted trajectory: s(center, y) <= radius."""

    center: np.ndarray
    radius: float
    score_kind: str = SCORE_L2

    @property
    def dim(self) -> int:
        """Flattened label dimension 2 * horizon."""
        return 2 * len(self.center)

    def contains(self, label) -> bool:
        lab = np.asarray(label, dtype=float)
        return bool(score_batch(self.score_kind, self.center[None], lab[None])[0] <= self.radius)


def prediction_set(predictor: TrajectoryPredictor, x, calib: CalibrationResult,
                   kind: str = SCORE_L2) -> ConformalSet:
    """Ball centered at the prediction with the calibrated radius."""
    check_score_kind(kind)
    x = check_trajectory(x, "past trajectory")
    return ConformalSet(center=predictor.predict_one(x), radius=calib.q, score_kind=kind)


def test_scores(predictor: TrajectoryPredictor, past, future,
                calib: CalibrationResult, kind: str, mode: str = MODE_PLAIN) -> np.ndarray:
    """Test-time scores consistent with the calibration provenance."""
    is_eq = isinstance(predictor, EquivariantizedPredictor)
    if mode == MODE_SYMMETRIZED:
        if calib.provenance != PROV_SYMMETRIZED:
            raise InvalidInputError(
                f"symmetrized test scoring paired with {calib.provenance!r} calibration")
        if not is_eq:
            raise InvalidInputError(
                "symmetrized scoring needs a group-averaged predictor")
        return symmetrized_score_batch(kind, predictor.base, predictor.spec,
                                       predictor.conv, past, future,
                                       elements=predictor.elements)
    if mode != MODE_PLAIN:
        raise InvalidInputError(f"unknown scoring mode: {mode!r}")
    expected = PROV_EQUIVARIANTIZED if is_eq else PROV_PLAIN
    if calib.provenance != expected:
        raise InvalidInputError(
            f"plain scoring of a {expected!r} predictor paired with "
            f"{calib.provenance!r} calibration")
    return score_batch(kind, predictor.predict(past), future)


def empirical_coverage(predictor: TrajectoryPredictor, test,
                       calib: CalibrationResult, kind: str = SCORE_L2,
                       mode: str = MODE_PLAIN) -> float:
    """Fraction of test samples whose score is within the calibrated radius."""
    if len(test) == 0:
        raise InvalidInputError("cannot evaluate coverage on an empty test split")
    past, future = as_batches(test)
    values = test_scores(predictor, past, future, calib, kind, mode)
    return float(np.mean(values <= calib.q))


def equivariance_of_sets(predictor: EquivariantizedPredictor, x, g: GroupElement,
                         calib: CalibrationResult, kind: str = SCORE_L2,
                         tol: float = 1e-9) -> bool:
    """True iff the set at the rotated input equals the rotated set.

    Both sets are balls of the same calibrated radius in the same score
    norm, and rotations preserve that shape, so the check reduces to center
    equality: predicting at the rotated input must match rotating the
    prediction.
    """
    check_score_kind(kind)
    if calib.m < 1:
        raise InvalidInputError("calibration result is empty")
    x = check_trajectory(x, "past trajectory")
    conv = predictor.conv
    anchor = x[-1] if conv.pivot == PIVOT_LAST_OBSERVED else None
    moved_center = predictor.predict_one(apply_input_action(g, x, conv))
    rotated_center = rotate_points(predictor.predict_one(x), g.angle, anchor)
    return bool(np.max(np.abs(moved_center - rotated_center)) <= tol)


def split_rng(seed: int, split_index: int) -> np.random.Generator:
    """Per-split generator derived from (run seed, split index)."""
    return np.random.default_rng([int(seed), int(split_index)])


def calibration_records(values_by_provenance: dict[str, np.ndarray], m: int,
                        alphas, n_splits: int, seed: int) -> list[dict]:
    """Shared-permutation split sweep over precomputed score arrays.

    Every provenance sees the identical calibration/test partition per split,
    so all tables are paired comparisons.
    """
    sizes = {len(v) for v in values_by_provenance.values()}
    if len(sizes) != 1:
        raise InvalidInputError("score arrays must be paired (equal lengths)")
    n = sizes.pop()
    m = int(m)
    if not 1 <= m < n:
        raise InvalidInputError(f"calibration size m={m} needs 1 <= m < n={n}")
    if int(n_splits) < 1:
        raise InvalidInputError("need at least one split")
    alphas = [check_alpha(a) for a in alphas]
    records = []
    for split in range(int(n_splits)):
        perm = split_rng(seed, split).permutation(n)
        cal_idx, test_idx = perm[:m], perm[m:]
        for provenance, vals in values_by_provenance.items():
            cal_vals = vals[cal_idx]
            test_vals = vals[test_idx]
            for alpha in alphas:
                res = calibrate(cal_vals, alpha, provenance=provenance)
                records.append({
                    "alpha": float(alpha),
                    "split": int(split),
                    "m": int(res.m),
                    "k": int(res.k),
                    "q": float(res.q),
                    "coverage": float(np.mean(test_vals <= res.q)),
                    "provenance": provenance,
                })
    return records
