"""Small input-validation helpers shared across modules."""

from __future__ import annotations

import numpy as np


def as_1d_float(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_2d_float(x, name: str = "X") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


def require_min_samples(arr: np.ndarray, minimum: int, name: str = "samples") -> None:
    if arr.shape[0] < minimum:
        raise ValueError(f"{name}: need at least {minimum} values, got {arr.shape[0]}")


def require_positive(arr: np.ndarray, name: str = "samples") -> None:
    if np.any(arr <= 0):
        raise ValueError(f"{name} must be strictly positive")


def require_probability(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
