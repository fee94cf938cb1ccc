"""Rotation-invariant nonconformity scores and their group symmetrization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .groups import ActionConvention, GroupSpec, batch_pivots, enumerate_or_sample, rotate_batch
from .predictors import EquivariantizedPredictor, TrajectoryPredictor
from .validation import as_batches, check_paired, check_trajectory_batch

SCORE_L2 = "l2"    # Euclidean norm of the flattened displacement over the horizon
SCORE_MAX = "max"  # worst per-timestep Euclidean displacement

MODE_PLAIN = "plain"
MODE_SYMMETRIZED = "symmetrized"

PROV_PLAIN = "plain"
PROV_SYMMETRIZED = "symmetrized"
PROV_EQUIVARIANTIZED = "equivariantized"


def check_score_kind(kind: str) -> str:
    if kind not in (SCORE_L2, SCORE_MAX):
        raise InvalidInputError(f"unknown score kind: {kind!r}")
    return kind


def score_batch(kind: str, predictions, labels) -> np.ndarray:
    """Nonnegative displacement scores for paired (n, T, 2) batches.

    Both kinds are invariant under simultaneous rotation of prediction and
    label; the flattened-L2 kind is additionally convex in the prediction.
    """
    check_score_kind(kind)
    preds = np.asarray(predictions, dtype=float)
    labs = np.asarray(labels, dtype=float)
    if preds.shape != labs.shape:
        raise InvalidInputError(
            f"prediction and label shapes differ: {preds.shape} vs {labs.shape}")
    sq = (preds - labs) ** 2
    if kind == SCORE_L2:
        return np.sqrt(sq.sum(axis=(-2, -1)))
    return np.sqrt(sq.sum(axis=-1)).max(axis=-1)


def score(kind: str, prediction, label) -> float:
    """Score a single (prediction, label) trajectory pair."""
    pred = np.asarray(prediction, dtype=float)
    lab = np.asarray(label, dtype=float)
    return float(score_batch(kind, pred[None], lab[None])[0])


def symmetrized_score_batch(kind: str, base: TrajectoryPredictor, spec: GroupSpec,
                            conv: ActionConvention, past, future,
                            elements=None) -> np.ndarray:
    """Group-averaged scores: mean over g of s(f(g^-1 . x), g^-1 . y).

    By invariance of the score this equals the mean of s(U_g(x), y) over the
    aligned orbit predictions, so it shares its element sample with the
    group-averaged predictor whenever both are built from the same spec.
    """
    past = check_trajectory_batch(past, "past batch")
    future = check_trajectory_batch(future, "future batch")
    check_paired(past, future, "pasts", "futures")
    elems = enumerate_or_sample(spec) if elements is None else elements
    pivots = batch_pivots(conv, past)
    acc = np.zeros(len(past))
    for g in elems:
        back_x = rotate_batch(past, -g.angle, pivots)
        back_y = rotate_batch(future, -g.angle, pivots)
        acc += score_batch(kind, base.predict(back_x), back_y)
    return acc / len(elems)


def symmetrized_score(kind: str, base: TrajectoryPredictor, spec: GroupSpec,
                      conv: ActionConvention, x, y) -> float:
    """Group-averaged score of one sample."""
    vals = symmetrized_score_batch(kind, base, spec, conv,
                                   np.asarray(x, float)[None],
                                   np.asarray(y, float)[None])
    return float(vals[0])


@dataclass
class ScoreSet:
    """Nonconformity scores with provenance recorded before any statistics."""

    values: np.ndarray
    provenance: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size and (not np.all(np.isfinite(vals)) or vals.min() < 0.0):
            raise InvalidInputError("scores must be finite and nonnegative")
        if self.provenance not in (PROV_PLAIN, PROV_SYMMETRIZED, PROV_EQUIVARIANTIZED):
            raise InvalidInputError(f"unknown provenance: {self.provenance!r}")
        self.values = vals

    def __len__(self) -> int:
        return self.values.size


def score_arrays(kind: str, predictor: TrajectoryPredictor, past, future,
                 mode: str = MODE_PLAIN) -> ScoreSet:
    """Score a batch, selecting the provenance from predictor type and mode."""
    if mode not in (MODE_PLAIN, MODE_SYMMETRIZED):
        raise InvalidInputError(f"unknown scoring mode: {mode!r}")
    is_eq = isinstance(predictor, EquivariantizedPredictor)
    if mode == MODE_SYMMETRIZED:
        if not is_eq:
            raise InvalidInputError(
                "symmetrized scoring needs a group-averaged predictor "
                "(wrap the base with equivariantize so element samples are shared)")
        values = symmetrized_score_batch(kind, predictor.base, predictor.spec,
                                         predictor.conv, past, future,
                                         elements=predictor.elements)
        provenance = PROV_SYMMETRIZED
    else:
        values = score_batch(kind, predictor.predict(np.asarray(past, float)), future)
        provenance = PROV_EQUIVARIANTIZED if is_eq else PROV_PLAIN
    meta = {"predictor": predictor.tag, "score": kind}
    if is_eq:
        meta["group"] = predictor.spec.label()
    return ScoreSet(values, provenance, meta)


def score_split(kind: str, predictor: TrajectoryPredictor, split,
                mode: str = MODE_PLAIN) -> ScoreSet:
    """One score per sample of a split, order preserved."""
    if len(split) == 0:
        raise InvalidInputError("cannot score an empty split")
    past, future = as_batches(split)
    return score_arrays(kind, predictor, past, future, mode)
