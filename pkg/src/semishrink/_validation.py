"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array


class ValidationError(ValueError):
    """Raised when an argument violates a documented precondition."""


def check_int(value, name, minimum=None):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_real(value, name, low=None, high=None, low_open=False, high_open=False):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Real):
        raise ValidationError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")
    if low is not None and (value < low or (low_open and value == low)):
        raise ValidationError(f"{name}={value} is below the allowed range")
    if high is not None and (value > high or (high_open and value == high)):
        raise ValidationError(f"{name}={value} is above the allowed range")
    return value


def check_vector(x, name, length=None):
    """Return ``x`` as a finite 1-D float array, optionally of fixed length."""
    try:
        arr = check_array(np.asarray(x, dtype=float).reshape(-1, 1), ensure_2d=True,
                          dtype=np.float64, ensure_all_finite=True,
                          ensure_min_samples=0).ravel()
    except ValueError as exc:
        raise ValidationError(f"{name}: {exc}") from exc
    if np.ndim(x) > 1 and np.shape(x)[0] != arr.size:
        raise ValidationError(f"{name} must be one-dimensional")
    if length is not None and arr.size != length:
        raise ValidationError(f"{name} must have length {length}, got {arr.size}")
    return arr


def check_weights(gamma, name="gamma", length=None):
    arr = check_vector(gamma, name, length)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValidationError(f"{name} entries must lie in [0, 1]")
    return arr
