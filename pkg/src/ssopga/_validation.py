"""Small input-validation helpers shared across modules."""
import numbers

import numpy as np


def as_vector(y, name="y", *, length=None, copy=False):
    """Coerce ``y`` to a finite 1-D float array, checking its length."""
    arr = np.array(y, dtype=float, copy=copy or None, ndmin=1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


def check_nonnegative(y, name="y"):
    bad = np.flatnonzero(np.asarray(y) < 0)
    if bad.size:
        raise ValueError(f"{name}[{int(bad[0])}] is negative; multiplicative updates need y >= 0")
    return y


def check_nonnegative_scalar(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")
    return float(value)


def check_positive_scalar(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a finite positive number, got {value!r}")
    return float(value)
