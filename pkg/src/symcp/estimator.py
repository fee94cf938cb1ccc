"""Scikit-learn style front end for the conformal pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .conformal import ConformalSet, calibrate, prediction_set, test_scores
from .errors import InvalidInputError
from .groups import ActionConvention, GroupSpec
from .predictors import PolynomialRegressor, build_predictor, equivariantize
from .scores import (MODE_PLAIN, MODE_SYMMETRIZED, check_score_kind,
                     score_arrays)
from .validation import check_alpha, check_paired, check_trajectory_batch

MODE_EQUIVARIANTIZED = "equivariantized"
_MODES = (MODE_PLAIN, MODE_EQUIVARIANTIZED, MODE_SYMMETRIZED)


class ConformalTrajectoryPredictor(BaseEstimator):
    """Split conformal trajectory prediction, optionally rotation-averaged.

    Parameters
    ----------
    predictor : str, default="const-vel"
        Base predictor label: ``const-vel``, ``pose-biased[:bx=<f>:by=<f>]``
        or ``polyfit[:degree=<int>]``.
    group : str or None, default=None
        Rotation group label (``c4``, ``c8``, ``so2:K=<int>:seed=<int>``);
        required unless ``mode="plain"``.
    mode : {"plain", "equivariantized", "symmetrized"}, default="plain"
        ``equivariantized`` averages the predictor over the group before
        scoring; ``symmetrized`` keeps the base predictor and group-averages
        the nonconformity score instead.
    score_kind : {"l2", "max"}, default="l2"
    alpha : float, default=0.1
        Target miscoverage in (0, 1).
    pivot : {"last-observed", "origin"}, default="last-observed"
    train_fraction : float, default=0.5
        Share of the fit data used to train a trainable base predictor; the
        rest calibrates. Ignored for training-free predictors.
    random_state : int, default=0
        Seed for the train/calibration partition.

    Attributes (after ``fit``)
    --------------------------
    predictor_ : the working point predictor
    calibration_ : CalibrationResult with the conformal quantile
    m_, k_, q_ : calibration size, order-statistic index, radius
    """

    def __init__(self, predictor="const-vel", group=None, mode=MODE_PLAIN,
                 score_kind="l2", alpha=0.1, pivot="last-observed",
                 train_fraction=0.5, random_state=0):
        self.predictor = predictor
        self.group = group
        self.mode = mode
        self.score_kind = score_kind
        self.alpha = alpha
        self.pivot = pivot
        self.train_fraction = train_fraction
        self.random_state = random_state

    def fit(self, X, y):
        """Train the base predictor if needed, then calibrate on the rest.

        X is an array of observed pasts (n, t_obs, 2); y the matching futures
        (n, t_pred, 2).
        """
        X = check_trajectory_batch(X, "X")
        y = check_trajectory_batch(y, "y")
        check_paired(X, y, "X", "y")
        alpha = check_alpha(self.alpha)
        kind = check_score_kind(self.score_kind)
        if self.mode not in _MODES:
            raise InvalidInputError(f"unknown mode: {self.mode!r}")
        if self.mode != MODE_PLAIN and self.group is None:
            raise InvalidInputError(f"mode {self.mode!r} requires a group label")

        base = build_predictor(self.predictor, horizon=y.shape[1])
        if isinstance(base, PolynomialRegressor):
            frac = float(self.train_fraction)
            n_train = int(round(frac * len(X)))
            if not 1 <= n_train < len(X):
                raise InvalidInputError(
                    f"train_fraction={frac} leaves no usable train/calibration split")
            perm = np.random.default_rng(self.random_state).permutation(len(X))
            base.fit(X[perm[:n_train]], y[perm[:n_train]])
            X_cal, y_cal = X[perm[n_train:]], y[perm[n_train:]]
        else:
            X_cal, y_cal = X, y

        conv = ActionConvention(self.pivot)
        if self.mode == MODE_PLAIN:
            self.predictor_ = base
            scoring = base
            score_mode = MODE_PLAIN
        else:
            wrapped = equivariantize(base, GroupSpec.parse(self.group), conv)
            scoring = wrapped
            self.predictor_ = wrapped if self.mode == MODE_EQUIVARIANTIZED else base
            score_mode = MODE_PLAIN if self.mode == MODE_EQUIVARIANTIZED \
                else MODE_SYMMETRIZED
        self._scoring_predictor = scoring
        self._score_mode = score_mode
        self.scores_ = score_arrays(kind, scoring, X_cal, y_cal, score_mode)
        self.calibration_ = calibrate(self.scores_, alpha)
        self.m_ = self.calibration_.m
        self.k_ = self.calibration_.k
        self.q_ = self.calibration_.q
        return self

    def _check_fitted(self):
        if not hasattr(self, "calibration_"):
            raise NotFittedError(
                "this conformal predictor is not fitted yet; call fit first")

    def predict(self, X) -> np.ndarray:
        """Point predictions of the working predictor, shape (n, t_pred, 2)."""
        self._check_fitted()
        return self.predictor_.predict(check_trajectory_batch(X, "X"))

    def predict_set(self, X) -> list[ConformalSet]:
        """Score balls around the point predictions (plain/equivariantized modes)."""
        self._check_fitted()
        if self._score_mode == MODE_SYMMETRIZED:
            raise InvalidInputError(
                "symmetrized sets are not balls around a center; use contains()")
        X = check_trajectory_batch(X, "X")
        return [prediction_set(self.predictor_, x, self.calibration_, self.score_kind)
                for x in X]

    def contains(self, X, y) -> np.ndarray:
        """Boolean membership of each label in its prediction set."""
        self._check_fitted()
        X = check_trajectory_batch(X, "X")
        y = check_trajectory_batch(y, "y")
        check_paired(X, y, "X", "y")
        values = test_scores(self._scoring_predictor, X, y, self.calibration_,
                             self.score_kind, self._score_mode)
        return values <= self.calibration_.q

    def score_samples(self, X, y) -> np.ndarray:
        """Test-time nonconformity scores consistent with the calibration."""
        self._check_fitted()
        X = check_trajectory_batch(X, "X")
        y = check_trajectory_batch(y, "y")
        check_paired(X, y, "X", "y")
        return test_scores(self._scoring_predictor, X, y, self.calibration_,
                           self.score_kind, self._score_mode)

    def score(self, X, y) -> float:
        """Empirical coverage on held-out pairs (higher is better)."""
        return float(np.mean(self.contains(X, y)))
