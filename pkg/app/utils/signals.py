import numpy as np

from app.utils.validators import validate_unit_interval

# (left, right, level) on right-open intervals [left, right)
OUTER_PIECES = ((0.15, 0.3, 2.0), (0.3, 0.5, -1.0), (0.5, 0.85, 1.0), (0.85, 1.0, -1.0))


def outer_values(x) -> np.ndarray:
    """Piecewise-constant regression function lying outside the Sobolev RKHS."""
    x = np.asarray(x, dtype=float)
    values = np.zeros_like(x)
    for left, right, level in OUTER_PIECES:
        values = np.where((x >= left) & (x < right), level, values)
    return values


def inner_values(x) -> np.ndarray:
    """Smooth regression function (1 + x)/2 * sin(2 pi x (1 + x))."""
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + x) * np.sin(2.0 * np.pi * x * (1.0 + x))


def outer_signal(x: float) -> float:
    return float(outer_values(validate_unit_interval(x)))


def inner_signal(x: float) -> float:
    return float(inner_values(validate_unit_interval(x)))
