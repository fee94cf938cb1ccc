"""Deterministic trajectory predictors and the group-averaging wrapper."""

from __future__ import annotations

import itertools
import re

import numpy as np

from .errors import InvalidInputError
from .groups import (ActionConvention, GroupSpec, batch_pivots,
                     enumerate_or_sample, rotate_batch)
from .validation import check_paired, check_trajectory_batch


class TrajectoryPredictor:
    """Deterministic batch map from pasts (n, T_obs, 2) to futures (n, horizon, 2)."""

    tag = "base"

    def __init__(self, horizon: int = 12):
        if int(horizon) < 1:
            raise InvalidInputError("prediction horizon must be >= 1")
        self.horizon = int(horizon)

    def predict(self, past: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_one(self, past) -> np.ndarray:
        return self.predict(np.asarray(past, dtype=float)[None])[0]


class ConstantVelocity(TrajectoryPredictor):
    """Extrapolates the mean observed step; exactly rotation-equivariant."""

    tag = "const-vel"

    def predict(self, past):
        past = check_trajectory_batch(past)
        t_obs = past.shape[1]
        if t_obs > 1:
            vel = (past[:, -1] - past[:, 0]) / (t_obs - 1)
        else:
            vel = np.zeros((past.shape[0], 2))
        steps = np.arange(1, self.horizon + 1, dtype=float)
        return past[:, -1, None, :] + steps[None, :, None] * vel[:, None, :]


class PoseBiasedVelocity(TrajectoryPredictor):
    """Constant velocity plus a world-frame bias; deliberately not equivariant.

    The bias vector is fixed in world coordinates, so the prediction error
    depends on the pose of the input and group averaging has something to
    remove.
    """

    def __init__(self, horizon: int = 12, bias=(0.5, 0.0)):
        super().__init__(horizon)
        self.bias = np.asarray(bias, dtype=float)
        if self.bias.shape != (2,):
            raise InvalidInputError("bias must be a planar vector (bx, by)")
        self.tag = f"pose-biased:bx={self.bias[0]:g}:by={self.bias[1]:g}"
        self._cv = ConstantVelocity(horizon)

    def predict(self, past):
        return self._cv.predict(past) + self.bias


class FixedPoint(TrajectoryPredictor):
    """Ignores the past and predicts one fixed world point at every step."""

    def __init__(self, horizon: int = 12, point=(0.0, 0.0)):
        super().__init__(horizon)
        self.point = np.asarray(point, dtype=float)
        self.tag = f"fixed-point:{self.point[0]:g}:{self.point[1]:g}"

    def predict(self, past):
        past = check_trajectory_batch(past)
        return np.tile(self.point, (past.shape[0], self.horizon, 1))


class PolynomialRegressor(TrajectoryPredictor):
    """Least-squares polynomial map from past coordinates (relative to the
    last observed point) to future offsets; generically not equivariant."""

    def __init__(self, horizon: int = 12, degree: int = 1):
        super().__init__(horizon)
        if int(degree) < 1:
            raise InvalidInputError("polynomial degree must be >= 1")
        self.degree = int(degree)
        self.tag = f"polyfit:degree={self.degree}"
        self.coef_ = None

    def _features(self, past):
        rel = past - past[:, -1:, :]
        flat = rel.reshape(len(past), -1)
        cols = [np.ones(len(past))]
        for d in range(1, self.degree + 1):
            for combo in itertools.combinations_with_replacement(range(flat.shape[1]), d):
                col = np.ones(len(past))
                for j in combo:
                    col = col * flat[:, j]
                cols.append(col)
        return np.column_stack(cols)

    def fit(self, past, future):
        past = check_trajectory_batch(past)
        future = check_trajectory_batch(future, length=self.horizon)
        check_paired(past, future)
        target = (future - past[:, -1:, :]).reshape(len(past), -1)
        self.coef_, *_ = np.linalg.lstsq(self._features(past), target, rcond=None)
        return self

    def predict(self, past):
        if self.coef_ is None:
            raise InvalidInputError("polynomial predictor must be fit before predicting")
        past = check_trajectory_batch(past)
        offsets = self._features(past) @ self.coef_
        return offsets.reshape(len(past), self.horizon, 2) + past[:, -1:, :]


class LookupPredictor(TrajectoryPredictor):
    """Serves precomputed predictions keyed by dataset-order sample index.

    Cannot evaluate transformed inputs, so it only supports the plain
    pipeline (no group averaging or score symmetrization).
    """

    tag = "external"

    def __init__(self, table: dict, horizon: int):
        super().__init__(horizon)
        self.table = {int(k): np.asarray(v, dtype=float) for k, v in table.items()}

    def predict(self, past, indices=None):
        if indices is None:
            raise InvalidInputError(
                "lookup predictor needs explicit sample indices; it cannot score transformed inputs")
        out = np.empty((len(indices), self.horizon, 2))
        for row, i in enumerate(indices):
            key = int(i)
            if key not in self.table:
                raise InvalidInputError(f"no stored prediction for sample index {key}")
            out[row] = self.table[key]
        return out


class EquivariantizedPredictor(TrajectoryPredictor):
    """Uniform average of rotated base predictions over the group's elements.

    Elements are enumerated once at construction, so repeated evaluations and
    the symmetrized-score path consume the identical Monte-Carlo draw; for
    cyclic groups the average is exactly equivariant on the group's own
    elements.
    """

    def __init__(self, base: TrajectoryPredictor, spec: GroupSpec,
                 conv: ActionConvention = ActionConvention()):
        super().__init__(base.horizon)
        self.base = base
        self.spec = spec
        self.conv = conv
        self.elements = enumerate_or_sample(spec)
        self.tag = f"eq[{spec.label()}]({base.tag})"

    def orbit_terms(self, past) -> np.ndarray:
        """Aligned orbit predictions, shape (n_elements, n, horizon, 2)."""
        past = check_trajectory_batch(past)
        pivots = batch_pivots(self.conv, past)
        terms = np.empty((len(self.elements), len(past), self.horizon, 2))
        for i, g in enumerate(self.elements):
            back = rotate_batch(past, -g.angle, pivots)
            terms[i] = rotate_batch(self.base.predict(back), g.angle, pivots)
        return terms

    def predict(self, past):
        return self.orbit_terms(past).mean(axis=0)


def equivariantize(base: TrajectoryPredictor, spec: GroupSpec,
                   conv: ActionConvention = ActionConvention()) -> EquivariantizedPredictor:
    """Wrap a predictor with group averaging (weights sum to one)."""
    return EquivariantizedPredictor(base, spec, conv)


def evaluate_orbit_terms(base: TrajectoryPredictor, spec: GroupSpec, x,
                         conv: ActionConvention = ActionConvention()) -> list[np.ndarray]:
    """Single-sample orbit predictions; their mean equals the averaged prediction."""
    terms = EquivariantizedPredictor(base, spec, conv).orbit_terms(
        np.asarray(x, dtype=float)[None])
    return [t[0] for t in terms]


def build_predictor(tag: str, horizon: int) -> TrajectoryPredictor:
    """Construct a predictor from its config label.

    Labels: ``const-vel``, ``pose-biased[:bx=<f>:by=<f>]``,
    ``polyfit[:degree=<int>]``. Polynomial predictors come back unfitted.
    """
    text = str(tag).strip()
    if text == "const-vel":
        return ConstantVelocity(horizon)
    if text == "pose-biased":
        return PoseBiasedVelocity(horizon)
    m = re.fullmatch(r"pose-biased:bx=([-+0-9.eE]+):by=([-+0-9.eE]+)", text)
    if m:
        return PoseBiasedVelocity(horizon, bias=(float(m.group(1)), float(m.group(2))))
    if text == "polyfit":
        return PolynomialRegressor(horizon)
    m = re.fullmatch(r"polyfit:degree=(\d+)", text)
    if m:
        return PolynomialRegressor(horizon, degree=int(m.group(1)))
    raise InvalidInputError(f"unknown predictor tag: {tag!r}")
