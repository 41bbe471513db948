"""Input validation helpers shared by the estimators and the CLI."""

import numbers

import numpy as np


class NonFiniteWeightError(ValueError):
    """Raised when a weight matrix contains NaN or Inf.

    The offending (row, col) index is kept on ``index``.
    """

    def __init__(self, index):
        self.index = tuple(int(i) for i in index)
        super().__init__(f"non-finite weight at index {self.index}")


def check_weights(W, *, name="weights", copy=False):
    """Validate a single layer's weight matrix.

    Parameters
    ----------
    W : array-like of shape (m, n)
        Raw weights. Rows are input-side vertices, columns output-side.
    name : str
        Used in error messages.
    copy : bool
        Force a copy even when ``W`` is already a float64 array.

    Returns
    -------
    ndarray of float64, shape (m, n), C-contiguous.
    """
    arr = np.array(W, dtype=np.float64, copy=copy, order="C") if copy else np.ascontiguousarray(W, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name}: both dimensions must be >= 1, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        raise NonFiniteWeightError(np.argwhere(bad)[0])
    return arr


def check_count(value, name, *, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_norm_order(p):
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"norm order p must be >= 1, got {p}")
    return p
