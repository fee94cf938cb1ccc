"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def check_trajectory(arr, name: str = "trajectory", length: int | None = None) -> np.ndarray:
    """Coerce to a float (T, 2) array: nonempty, finite coordinates."""
    out = np.asarray(arr, dtype=float)
    if out.ndim != 2 or out.shape[-1] != 2:
        raise InvalidInputError(f"{name} must have shape (T, 2), got {out.shape}")
    if out.shape[0] == 0:
        raise InvalidInputError(f"{name} is empty")
    if length is not None and out.shape[0] != length:
        raise InvalidInputError(f"{name} must have length {length}, got {out.shape[0]}")
    if not np.all(np.isfinite(out)):
        raise InvalidInputError(f"{name} contains non-finite coordinates")
    return out


def check_trajectory_batch(arr, name: str = "trajectory batch",
                           length: int | None = None) -> np.ndarray:
    """Coerce to a float (n, T, 2) array with finite coordinates and T >= 1."""
    out = np.asarray(arr, dtype=float)
    if out.ndim != 3 or out.shape[-1] != 2:
        raise InvalidInputError(f"{name} must have shape (n, T, 2), got {out.shape}")
    if out.shape[1] == 0:
        raise InvalidInputError(f"{name} has zero-length trajectories")
    if length is not None and out.shape[1] != length:
        raise InvalidInputError(f"{name} must have trajectory length {length}, got {out.shape[1]}")
    if not np.all(np.isfinite(out)):
        raise InvalidInputError(f"{name} contains non-finite coordinates")
    return out


def check_paired(x, y, name_x: str = "inputs", name_y: str = "labels") -> None:
    if len(x) != len(y):
        raise InvalidInputError(
            f"{name_x} and {name_y} must be paired: got {len(x)} vs {len(y)} rows")


def check_alpha(alpha) -> float:
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise InvalidInputError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    return a


def as_batches(samples) -> tuple[np.ndarray, np.ndarray]:
    """Stack a list of samples (or an (X, Y) pair) into batch arrays."""
    if isinstance(samples, tuple) and len(samples) == 2:
        past, future = samples
    else:
        if len(samples) == 0:
            raise InvalidInputError("sample list is empty")
        past = np.stack([np.asarray(s.past, dtype=float) for s in samples])
        future = np.stack([np.asarray(s.future, dtype=float) for s in samples])
    past = check_trajectory_batch(past, "past batch")
    future = check_trajectory_batch(future, "future batch")
    check_paired(past, future, "pasts", "futures")
    return past, future
