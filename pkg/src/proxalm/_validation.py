"""Input validation helpers and the package's exception types."""

import numbers

import numpy as np
from sklearn.utils import check_array


class ParameterError(ValueError):
    """Invalid parameter or malformed input."""


class DivergenceError(ArithmeticError):
    """An iterate became non-finite or blew past the divergence bound."""


def check_matrix(A, name="A"):
    try:
        return check_array(A, dtype=np.float64, ensure_2d=True, ensure_min_samples=1,
                           ensure_min_features=1, input_name=name)
    except ValueError as exc:
        raise ParameterError(f"{name}: {exc}") from exc


def check_vector(v, name="vector", size=None):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ParameterError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} contains non-finite entries")
    if size is not None and v.size != size:
        raise ParameterError(f"{name} must have length {size}, got {v.size}")
    return v


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be a positive real, got {value!r}")
    return float(value)


def check_positive_int(value, name):
    if not isinstance(value, numbers.Integral) or value <= 0:
        raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
