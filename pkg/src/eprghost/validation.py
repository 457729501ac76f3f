"""Input validation helpers for the estimator interface."""

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d

from .exceptions import DataError

__all__ = ["check_positions", "check_targets", "check_sigmas"]


def check_positions(X):
    """Scan positions as a finite 1-D float array.

    Accepts a 1-D sequence or an ``(n, 1)`` array.
    """
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr = check_array(arr, dtype=float, ensure_2d=True)
    if arr.shape[1] != 1:
        raise DataError(f"expected a single position column, got {arr.shape[1]}")
    return arr[:, 0]


def check_targets(y, n):
    y = column_or_1d(check_array(np.asarray(y, dtype=float), ensure_2d=False), warn=True)
    if y.size != n:
        raise DataError(f"got {y.size} targets for {n} positions")
    return y


def check_sigmas(sigma, sample_weight, n):
    """Per-point errors from ``sigma`` or from inverse-variance weights."""
    if sigma is not None and sample_weight is not None:
        raise DataError("pass either sigma or sample_weight, not both")
    if sigma is None and sample_weight is None:
        return np.ones(n)
    if sigma is not None:
        s = check_targets(sigma, n)
    else:
        w = check_targets(sample_weight, n)
        if np.any(w <= 0):
            raise DataError("sample_weight must be positive")
        s = 1.0 / np.sqrt(w)
    if np.any(s <= 0):
        raise DataError("sigma must be positive")
    return s
