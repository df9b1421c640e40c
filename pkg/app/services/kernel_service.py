import logging

import numpy as np

from app.exceptions import InvalidInputError
from app.models.kernel_model import Design, Kernel, KernelMatrix, KernelVariant
from app.utils.validators import validate_unit_interval

logger = logging.getLogger(__name__)


def _kernel_values(kernel: Kernel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if kernel.variant is KernelVariant.SOBOLEV:
        return np.minimum(x, y)
    # exp(-(x - y)^2 / w^2)
    return np.exp(-np.square(x - y) / kernel.bandwidth ** 2)


def eval_kernel(kernel: Kernel, x: float, y: float) -> float:
    """
    Evaluate k(x, y) for two points of [0, 1].

    Raises:
        InvalidInputError: If a point lies outside [0, 1].
    """
    validate_unit_interval(x, "x")
    validate_unit_interval(y, "y")
    return float(_kernel_values(kernel, np.float64(x), np.float64(y)))


def fixed_design(n: int) -> Design:
    """The deterministic design x_i = i/n, i = 1..n."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidInputError(f"Sample size must be a positive integer, got {n!r}")
    points = np.arange(1, n + 1, dtype=float) / n
    return Design(points)


def kernel_matrix(kernel: Kernel, design: Design) -> KernelMatrix:
    """Assemble K_n with the 1/n normalization."""
    x = design.points
    n = design.n
    entries = _kernel_values(kernel, x[:, None], x[None, :]) / n
    # both kernels are symmetric elementwise; this removes any last-bit asymmetry
    entries = 0.5 * (entries + entries.T)
    logger.debug("Assembled %s kernel matrix of size %d (trace %.6g)", kernel.variant.value, n, np.trace(entries))
    return KernelMatrix(entries)
