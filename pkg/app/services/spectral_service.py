"""
Spectral functionals of a kernel matrix.

All quantities are expressed through one SpectralDecomposition of K_n and the
empirical coordinates of the vectors involved, so that a decomposition computed
once per design is reused by every stopping rule and every replication.
Functions are pure; the decomposition and regularizer are immutable.
"""
import logging
import math
from typing import Callable

import numpy as np
import scipy.linalg

from app.exceptions import InvalidInputError, NumericalError
from app.models.kernel_model import KernelMatrix
from app.models.regularizer_model import Regularizer
from app.models.spectral_model import EmpiricalCoords, RiskCurve, SpectralDecomposition
from app.utils.validators import validate_positive, validate_time, validate_vector

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12


def decompose(K: KernelMatrix) -> SpectralDecomposition:
    """
    Eigen-decompose K_n; eigenvalues are sorted non-increasing and clamped at 0.

    Raises:
        InvalidInputError: If K is not symmetric.
        NumericalError: If the eigensolver fails; the report carries the matrix condition.
    """
    entries = K.entries
    asymmetry = float(np.max(np.abs(entries - entries.T)))
    scale = max(float(np.max(np.abs(entries))), 1.0)
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        raise InvalidInputError(f"Kernel matrix is not symmetric (max |K - K^T| = {asymmetry:.3g})")
    try:
        eigenvalues, basis = scipy.linalg.eigh(entries, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        report = {
            "n": K.n,
            "finite": bool(np.all(np.isfinite(entries))),
            "frobenius_norm": float(np.linalg.norm(entries)) if np.all(np.isfinite(entries)) else math.inf,
        }
        if report["finite"]:
            report["condition"] = float(np.linalg.cond(entries))
        logger.error("Eigendecomposition failed: %s (%s)", e, report)
        raise NumericalError(f"Eigendecomposition of the kernel matrix failed: {e}", report) from e
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    basis = basis[:, order]
    if eigenvalues.size and eigenvalues[-1] < -1e-10 * max(eigenvalues[0], 0.0):
        logger.warning("Clamping eigenvalue %.3g of a kernel matrix expected to be PSD", eigenvalues[-1])
    eigenvalues = np.maximum(eigenvalues, 0.0)
    logger.debug("Decomposed K_n (n=%d, lambda_1=%.6g, rank=%d)", K.n, eigenvalues[0], np.count_nonzero(eigenvalues))
    return SpectralDecomposition(eigenvalues, basis)


def coords(decomp: SpectralDecomposition, a) -> EmpiricalCoords:
    """Coordinates of `a` in the empirical orthonormal basis: u_j^T a / sqrt(n)."""
    a = validate_vector(a, decomp.n, "a")
    return EmpiricalCoords(decomp.basis.T @ a / math.sqrt(decomp.n))


def filter_g(reg: Regularizer, t: float, lam: float) -> float:
    """g_t(lambda) for scalar arguments."""
    t = validate_time(t)
    lam = validate_time(lam, "lambda")
    return float(reg.g(t, lam))


def residual_r(reg: Regularizer, t: float, lam: float) -> float:
    """r_t(lambda) = 1 - lambda g_t(lambda), in [0, 1]."""
    t = validate_time(t)
    lam = validate_time(lam, "lambda")
    return float(reg.residual(t, lam))


def _lambda_g(decomp: SpectralDecomposition, reg: Regularizer, t: float) -> np.ndarray:
    t = validate_time(t)
    reg.check_stability(decomp.lambda_max)
    return reg.lambda_g(t, decomp.eigenvalues)


def _check_coords(decomp: SpectralDecomposition, z: EmpiricalCoords, name: str) -> np.ndarray:
    if z.n != decomp.n:
        raise InvalidInputError(f"{name} has length {z.n}, expected {decomp.n}")
    return z.coeffs


def _smoothing(decomp: SpectralDecomposition, T: float) -> np.ndarray:
    validate_positive(T, "T")
    return decomp.smoothing_weights(T)


def estimate(decomp: SpectralDecomposition, reg: Regularizer, t: float, Y) -> np.ndarray:
    """Fitted values K_n g_t(K_n) Y = sum_j lambda_j g_t(lambda_j) (u_j^T Y) u_j."""
    Y = validate_vector(Y, decomp.n, "Y")
    phi = _lambda_g(decomp, reg, t)
    return decomp.basis @ (phi * (decomp.basis.T @ Y))


def empirical_risk(decomp: SpectralDecomposition, reg: Regularizer, t: float, zY: EmpiricalCoords) -> float:
    """||Y - f_hat^(t)||_n^2 = sum_j r_t(lambda_j)^2 zY_j^2."""
    z = _check_coords(decomp, zY, "zY")
    r = 1.0 - _lambda_g(decomp, reg, t)
    return float(np.sum(np.square(r * z)))


def smoothed_risk(decomp: SpectralDecomposition, reg: Regularizer, t: float, T: float, zY: EmpiricalCoords) -> float:
    """Residual norm after Tikhonov smoothing at horizon T: sum_j w_j r_t(lambda_j)^2 zY_j^2."""
    z = _check_coords(decomp, zY, "zY")
    w = _smoothing(decomp, T)
    r = 1.0 - _lambda_g(decomp, reg, t)
    return float(np.sum(w * np.square(r * z)))


def effective_dimension(decomp: SpectralDecomposition, t: float) -> float:
    """N_n(t) = sum_j lambda_j t / (lambda_j t + 1)."""
    t = validate_time(t)
    if math.isinf(t):
        return float(decomp.rank)
    lam = decomp.eigenvalues
    return float(np.sum(lam * t / (lam * t + 1.0)))


def g_effective_dimension(decomp: SpectralDecomposition, reg: Regularizer, t: float) -> float:
    """N_n^g(t) = tr(K_n g_t(K_n))."""
    return float(np.sum(_lambda_g(decomp, reg, t)))


def smoothed_g_effective_dimension(decomp: SpectralDecomposition, reg: Regularizer, t: float, T: float) -> float:
    """Smoothed g-effective dimension sum_j w_j lambda_j g_t(lambda_j), w_j the smoothing weights at T."""
    w = _smoothing(decomp, T)
    return float(np.sum(w * _lambda_g(decomp, reg, t)))


def bias_sq(decomp: SpectralDecomposition, reg: Regularizer, t: float, zf: EmpiricalCoords) -> float:
    """Squared bias ||r_t(K_n) f||_n^2."""
    return empirical_risk(decomp, reg, t, zf)


def _sigma_sq(sigma_sq: float) -> float:
    sigma_sq = float(sigma_sq)
    if math.isnan(sigma_sq) or sigma_sq < 0.0:
        raise InvalidInputError(f"sigma_sq must be non-negative, got {sigma_sq}")
    return sigma_sq


def proxy_variance(decomp: SpectralDecomposition, reg: Regularizer, t: float, sigma_sq: float) -> float:
    """v_t = sigma^2 N_n^g(t) / n."""
    return _sigma_sq(sigma_sq) * g_effective_dimension(decomp, reg, t) / decomp.n


def variance_term(decomp: SpectralDecomposition, reg: Regularizer, t: float, sigma_sq: float) -> float:
    """(sigma^2 / n) tr(g_t(K_n)^2 K_n^2)."""
    phi = _lambda_g(decomp, reg, t)
    return _sigma_sq(sigma_sq) * float(np.sum(np.square(phi))) / decomp.n


def expected_risk(decomp: SpectralDecomposition, reg: Regularizer, t: float, zf: EmpiricalCoords, sigma_sq: float) -> float:
    """Exact conditional risk E||f - f_hat^(t)||_n^2 under homoskedastic noise."""
    return bias_sq(decomp, reg, t, zf) + variance_term(decomp, reg, t, sigma_sq)


def expected_empirical_risk(decomp: SpectralDecomposition, reg: Regularizer, t: float, zf: EmpiricalCoords, sigma_sq: float) -> float:
    """E||Y - f_hat^(t)||_n^2 = b_t^2 + (sigma^2 / n) sum_j r_t(lambda_j)^2."""
    r = 1.0 - _lambda_g(decomp, reg, t)
    return bias_sq(decomp, reg, t, zf) + _sigma_sq(sigma_sq) * float(np.sum(np.square(r))) / decomp.n


def expected_smoothed_risk(decomp: SpectralDecomposition, reg: Regularizer, t: float, T: float, zf: EmpiricalCoords, sigma_sq: float) -> float:
    """Expectation of smoothed_risk: sum_j w_j r_t^2 (zf_j^2 + sigma^2 / n)."""
    z = _check_coords(decomp, zf, "zf")
    w = _smoothing(decomp, T)
    r2 = np.square(1.0 - _lambda_g(decomp, reg, t))
    return float(np.sum(w * r2 * (np.square(z) + _sigma_sq(sigma_sq) / decomp.n)))


def effective_rank_diagnostic(decomp: SpectralDecomposition, T: float) -> float:
    """
    Largest ratio (sum_{j>k} lambda_j / lambda_{k+1}) / max(k, 1) over k >= 1 with lambda_k T >= 1.

    A ratio with an empty tail (lambda_{k+1} = 0) counts as 0.
    """
    validate_positive(T, "T")
    lam = decomp.eigenvalues
    n = lam.size
    if n < 2:
        return 0.0
    tails = np.cumsum(lam[::-1])[::-1]
    best = 0.0
    for k in range(1, n):
        if lam[k - 1] * T < 1.0:
            break
        nxt, tail = lam[k], tails[k]
        ratio = 0.0 if nxt <= 0.0 else tail / nxt
        best = max(best, ratio / max(k, 1))
    return float(best)


CURVE_FUNCTIONALS = (
    "empirical_risk", "smoothed_risk", "bias_sq", "proxy_variance", "variance_term",
    "expected_risk", "expected_empirical_risk", "effective_dimension",
    "g_effective_dimension", "smoothed_g_effective_dimension",
)


def risk_curve(
    decomp: SpectralDecomposition,
    reg: Regularizer,
    grid,
    functional: str,
    *,
    zY: EmpiricalCoords | None = None,
    zf: EmpiricalCoords | None = None,
    sigma_sq: float = 1.0,
    T: float | None = None,
) -> RiskCurve:
    """Tabulate one named functional on an increasing grid of times."""
    evaluators: dict[str, Callable[[float], float]] = {
        "empirical_risk": lambda t: empirical_risk(decomp, reg, t, zY),
        "smoothed_risk": lambda t: smoothed_risk(decomp, reg, t, T, zY),
        "bias_sq": lambda t: bias_sq(decomp, reg, t, zf),
        "proxy_variance": lambda t: proxy_variance(decomp, reg, t, sigma_sq),
        "variance_term": lambda t: variance_term(decomp, reg, t, sigma_sq),
        "expected_risk": lambda t: expected_risk(decomp, reg, t, zf, sigma_sq),
        "expected_empirical_risk": lambda t: expected_empirical_risk(decomp, reg, t, zf, sigma_sq),
        "effective_dimension": lambda t: effective_dimension(decomp, t),
        "g_effective_dimension": lambda t: g_effective_dimension(decomp, reg, t),
        "smoothed_g_effective_dimension": lambda t: smoothed_g_effective_dimension(decomp, reg, t, T),
    }
    if functional not in evaluators:
        raise InvalidInputError(f"Unknown functional '{functional}'; expected one of {', '.join(CURVE_FUNCTIONALS)}")
    if functional in ("empirical_risk", "smoothed_risk") and zY is None:
        raise InvalidInputError(f"{functional} needs the observation coordinates zY")
    if functional in ("bias_sq", "expected_risk", "expected_empirical_risk") and zf is None:
        raise InvalidInputError(f"{functional} needs the signal coordinates zf")
    if functional.startswith("smoothed") and T is None:
        raise InvalidInputError(f"{functional} needs a smoothing horizon T")
    grid = np.asarray(grid, dtype=float)
    values = np.array([evaluators[functional](float(t)) for t in grid])
    return RiskCurve(grid, values, functional)
