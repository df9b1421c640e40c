import bisect
import logging
import math
from typing import Callable

from scipy.optimize import bisect as scipy_bisect

logger = logging.getLogger(__name__)

# bracket expansion limit used when the upper end of the search is infinite
MAX_BRACKET = 1e15


def first_crossing(gap: Callable[[float], float], lo: float, hi: float, tolerance: float) -> tuple[float, bool]:
    """
    Locate inf{t in [lo, hi] : gap(t) <= 0} for a non-increasing gap.

    Returns:
        tuple[float, bool]: The crossing time and whether no crossing exists below `hi`
        (in which case `hi` itself is returned).
    """
    if gap(lo) <= 0.0:
        return lo, False
    if math.isinf(hi):
        upper = max(2.0 * lo, 1.0)
        while gap(upper) > 0.0:
            if upper > MAX_BRACKET:
                return math.inf, True
            lo, upper = upper, 2.0 * upper
        hi = upper
    elif gap(hi) > 0.0:
        return hi, True
    # sign-only objective: a plateau of gap == 0 still resolves to its left end
    root = scipy_bisect(
        lambda t: 1.0 if gap(t) > 0.0 else -1.0,
        lo,
        hi,
        xtol=tolerance * 1e-6,
        rtol=max(tolerance, 1e-15),
        maxiter=1000,
    )
    return float(root), False


def first_integer_crossing(gap: Callable[[float], float], lo: int, hi: int) -> tuple[int, bool]:
    """
    Smallest integer t in [lo, hi] with gap(t) <= 0 for a gap non-increasing on the integers.

    Returns:
        tuple[int, bool]: The time and whether no crossing exists (then `hi` is returned).
    """
    if hi < lo:
        return hi, True
    index = bisect.bisect_left(range(lo, hi + 1), True, key=lambda t: gap(float(t)) <= 0.0)
    if index > hi - lo:
        return hi, True
    return lo + index, False
