"""Input validation shared by the estimators and the harness."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array, check_X_y

__all__ = ["check_points", "check_samples", "check_positive", "check_probability", "check_int"]


def check_points(X, d: int | None = None) -> np.ndarray:
    """2-d float array of points in ``[-1, 1]^d``."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if d is not None and X.shape[1] != d:
        raise ValueError(f"expected {d} coordinates per point, got {X.shape[1]}")
    if np.any(np.abs(X) > 1.0 + 1e-12):
        raise ValueError("points must lie in [-1, 1]^d")
    return np.clip(X, -1.0, 1.0)


def check_samples(X, y) -> tuple[np.ndarray, np.ndarray, bool]:
    """Validate a training pair; returns ``(X, Y, was_1d)`` with ``Y`` of shape ``(m, K)``."""
    X, y = check_X_y(X, y, dtype=np.float64, multi_output=True, y_numeric=True)
    X = check_points(X)
    was_1d = y.ndim == 1
    return X, (y[:, None] if was_1d else y), was_1d


def check_positive(name: str, value, allow_zero: bool = False) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number")
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'nonnegative' if allow_zero else 'positive'}, got {value}")
    return float(value)


def check_probability(name: str, value) -> float:
    value = check_positive(name, value)
    if value >= 1:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_int(name: str, value, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
