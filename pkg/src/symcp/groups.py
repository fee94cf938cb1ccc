"""Planar rotation groups: elements, Haar sampling, and trajectory actions.

Angles live in [0, 2*pi) and compositions are re-reduced after every
operation so long orbit products do not drift.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .validation import check_trajectory

TWO_PI = 2.0 * math.pi

PIVOT_ORIGIN = "origin"
PIVOT_LAST_OBSERVED = "last-observed"


def reduce_angle(angle: float) -> float:
    """Canonical representative of an angle in [0, 2*pi)."""
    a = math.fmod(float(angle), TWO_PI)
    if a < 0.0:
        a += TWO_PI
    if a >= TWO_PI:  # adding 2*pi to a tiny negative can round to exactly 2*pi
        a = 0.0
    return a


@dataclass(frozen=True)
class GroupElement:
    """A planar rotation by ``angle`` radians counterclockwise."""

    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", reduce_angle(self.angle))

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def inverse(self) -> "GroupElement":
        return GroupElement(-self.angle)


IDENTITY = GroupElement(0.0)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group product: rotate by ``h`` first, then by ``g``."""
    return GroupElement(g.angle + h.angle)


@dataclass(frozen=True)
class GroupSpec:
    """A cyclic rotation group or a seeded Monte-Carlo sample from SO(2).

    ``cyclic`` enumerates the n rotations 2*pi*j/n (identity included);
    ``so2`` draws ``n`` i.i.d. uniform angles from a generator seeded with
    ``seed``, bit-identical across calls so every consumer of the same spec
    sees the same element sample (common random numbers).
    """

    kind: str
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("cyclic", "so2"):
            raise InvalidInputError(f"unknown group kind: {self.kind!r}")
        if int(self.n) < 1:
            raise InvalidInputError("group element count must be >= 1")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def cyclic(cls, n: int) -> "GroupSpec":
        return cls("cyclic", n)

    @classmethod
    def so2_monte_carlo(cls, k: int, seed: int = 0) -> "GroupSpec":
        return cls("so2", k, seed)

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        """Parse a config label: ``c<n>`` or ``so2:K=<int>:seed=<int>``."""
        text = str(text).strip().lower()
        m = re.fullmatch(r"c(\d+)", text)
        if m:
            return cls.cyclic(int(m.group(1)))
        m = re.fullmatch(r"so2:k=(\d+):seed=(\d+)", text)
        if m:
            return cls.so2_monte_carlo(int(m.group(1)), int(m.group(2)))
        raise InvalidInputError(
            f"cannot parse group label {text!r}; expected 'c<n>' or 'so2:K=<int>:seed=<int>'")

    def label(self) -> str:
        if self.kind == "cyclic":
            return f"c{self.n}"
        return f"so2:K={self.n}:seed={self.seed}"

    def angles(self) -> np.ndarray:
        if self.kind == "cyclic":
            return TWO_PI * np.arange(self.n) / self.n
        rng = np.random.default_rng(self.seed)
        return rng.uniform(0.0, TWO_PI, self.n)

    def haar_weights(self) -> np.ndarray:
        """Uniform Haar weights, one per enumerated/sampled element."""
        return np.full(self.n, 1.0 / self.n)


def enumerate_or_sample(spec: GroupSpec) -> list[GroupElement]:
    """Elements of the described group, each carrying uniform weight 1/n."""
    return [GroupElement(float(a)) for a in spec.angles()]


@dataclass(frozen=True)
class ActionConvention:
    """Pivot choice for rotation actions on trajectory pairs.

    Under ``last-observed`` every rotation fixes the final observed point of
    the input trajectory, and output actions pivot about that same anchor.
    """

    pivot: str = PIVOT_LAST_OBSERVED

    def __post_init__(self):
        if self.pivot not in (PIVOT_ORIGIN, PIVOT_LAST_OBSERVED):
            raise InvalidInputError(f"unknown pivot convention: {self.pivot!r}")


def rotate_points(points, angle: float, pivot=None) -> np.ndarray:
    """Rotate (T, 2) points by ``angle`` about ``pivot`` (origin if None)."""
    pts = np.asarray(points, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    rot_t = np.array([[c, s], [-s, c]])  # transposed matrix for row vectors
    if pivot is None:
        return pts @ rot_t
    piv = np.asarray(pivot, dtype=float)
    return (pts - piv) @ rot_t + piv


def rotate_batch(batch, angle: float, pivots=None) -> np.ndarray:
    """Rotate (n, T, 2) stacks by one angle about per-sample pivots (n, 2)."""
    pts = np.asarray(batch, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    rot_t = np.array([[c, s], [-s, c]])
    if pivots is None:
        return pts @ rot_t
    piv = np.asarray(pivots, dtype=float)[:, None, :]
    return (pts - piv) @ rot_t + piv


def rotate_each(batch, angles, pivots=None) -> np.ndarray:
    """Rotate each (T, 2) stack in a batch by its own angle."""
    pts = np.asarray(batch, dtype=float)
    c = np.cos(angles)[:, None]
    s = np.sin(angles)[:, None]
    rel = pts if pivots is None else pts - np.asarray(pivots, float)[:, None, :]
    x, y = rel[..., 0], rel[..., 1]
    out = np.stack([c * x - s * y, s * x + c * y], axis=-1)
    return out if pivots is None else out + np.asarray(pivots, float)[:, None, :]


def batch_pivots(conv: ActionConvention, past_batch) -> np.ndarray | None:
    """Per-sample pivot points for a batch of pasts (None means the origin)."""
    if conv.pivot == PIVOT_LAST_OBSERVED:
        return np.asarray(past_batch, dtype=float)[:, -1, :]
    return None


def apply_input_action(g: GroupElement, x, conv: ActionConvention = ActionConvention()) -> np.ndarray:
    """Rotate an observed past about the convention's pivot (an isometry)."""
    x = check_trajectory(x, "past trajectory")
    pivot = x[-1] if conv.pivot == PIVOT_LAST_OBSERVED else None
    return rotate_points(x, g.angle, pivot)


def apply_output_action(g: GroupElement, y, conv: ActionConvention = ActionConvention(),
                        anchor=None) -> np.ndarray:
    """Rotate a future about the pivot inherited from the paired input.

    ``anchor`` must be the paired input's pivot point under the
    last-observed convention.
    """
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        y = y.reshape(0, 2)
    if y.ndim != 2 or y.shape[-1] != 2:
        raise InvalidInputError(f"future trajectory must have shape (T, 2), got {y.shape}")
    if conv.pivot == PIVOT_LAST_OBSERVED:
        if anchor is None:
            raise InvalidInputError(
                "last-observed pivot requires the paired input's anchor point")
        pivot = np.asarray(anchor, dtype=float)
    else:
        pivot = None
    return rotate_points(y, g.angle, pivot)


def orbit(spec: GroupSpec, x, y, conv: ActionConvention = ActionConvention()):
    """All (rotated past, rotated future) pairs along the group orbit."""
    x = check_trajectory(x, "past trajectory")
    anchor = x[-1] if conv.pivot == PIVOT_LAST_OBSERVED else None
    pairs = []
    for g in enumerate_or_sample(spec):
        pairs.append((apply_input_action(g, x, conv),
                      apply_output_action(g, y, conv, anchor=anchor)))
    return pairs
