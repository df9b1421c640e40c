import math

import numpy as np

from app.exceptions import InvalidInputError


def validate_unit_interval(value: float, name: str = "x") -> float:
    """
    Validate that a point lies in [0, 1].

    Args:
        value (float): Point to validate.
        name (str): Argument name used in the error message.

    Returns:
        float: The value as a float.

    Raises:
        InvalidInputError: If the value is not a finite number in [0, 1].
    """
    try:
        value = float(value)
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"{name} must be a real number, got {value!r}") from e
    if not math.isfinite(value) or value < 0.0 or value > 1.0:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value}")
    return value


def validate_vector(a, n: int, name: str = "vector") -> np.ndarray:
    """Return `a` as a float vector of length n, or raise InvalidInputError."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1 or arr.size != n:
        raise InvalidInputError(f"{name} must have length {n}, got shape {arr.shape}")
    return arr


def validate_time(t: float, name: str = "t") -> float:
    t = float(t)
    if math.isnan(t) or t < 0.0:
        raise InvalidInputError(f"{name} must be non-negative, got {t}")
    return t


def validate_positive(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or not value > 0.0:
        raise InvalidInputError(f"{name} must be positive, got {value}")
    return value
