"""
Stopping rules for spectral filter estimators.

Every rule is the first time at which a monotone gap drops to zero: the
(smoothed) empirical risk against a constant threshold for the data-driven
rules, squared bias against a variance proxy for the balancing rules. Searches
run either on integer iterations or by bisection on real times, capped at the
emergency stop.
"""
import logging
import math

import numpy as np

from app.dependencies import get_settings
from app.exceptions import InvalidInputError, UnsupportedModeError
from app.models.regularizer_model import Regularizer, RegularizerVariant
from app.models.spectral_model import EmpiricalCoords, SpectralDecomposition
from app.models.stopping_model import StoppingOutcome, StoppingRule
from app.schemas.stopping_schemas import ContinuousMode, IntegerGridMode, StoppingConfig, StoppingMode
from app.services import spectral_service as spectral
from app.utils.bisection import first_crossing, first_integer_crossing

logger = logging.getLogger(__name__)


def _check_mode(decomp: SpectralDecomposition, reg: Regularizer, config: StoppingConfig) -> None:
    reg.check_stability(decomp.lambda_max)
    if isinstance(config.mode, ContinuousMode) and not reg.supports_continuous(decomp.eigenvalues):
        raise UnsupportedModeError(
            f"Continuous mode is undefined for {reg.name} with eta={reg.eta}: some 1 - eta*lambda_j < 0; "
            "use the integer grid"
        )


def _search(gap, config: StoppingConfig, lower: float = 0.0) -> tuple[float, bool]:
    if isinstance(config.mode, IntegerGridMode):
        time, hit = first_integer_crossing(gap, math.ceil(lower), int(config.cap))
        return float(time), hit
    return first_crossing(gap, lower, config.emergency_stop, config.mode.tolerance)


def _default_mode(reg: Regularizer, T: float) -> StoppingMode:
    # Landweber counts iterations; Tikhonov and Showalter default to real times
    if reg.variant is not RegularizerVariant.LANDWEBER:
        return ContinuousMode(tolerance=get_settings().bisection_tolerance)
    max_iter = int(T) if math.isfinite(T) else get_settings().max_iter
    return IntegerGridMode(max_iter=max(max_iter, 1))


def tau_dp(decomp: SpectralDecomposition, reg: Regularizer, zY: EmpiricalCoords, config: StoppingConfig) -> StoppingOutcome:
    """Discrepancy principle: first t with ||Y - f_hat^(t)||_n^2 <= sigma^2, capped at T."""
    _check_mode(decomp, reg, config)
    threshold = config.sigma_sq
    time, hit = _search(lambda t: spectral.empirical_risk(decomp, reg, t, zY) - threshold, config)
    logger.debug("tau_DP = %s (emergency=%s)", time, hit)
    return StoppingOutcome(time, StoppingRule.DP, hit, threshold)


def sdp_threshold(decomp: SpectralDecomposition, sigma_sq: float, T: float) -> float:
    """sigma^2 N_n(T) / n, the threshold of the smoothed discrepancy principle under Tikhonov smoothing."""
    return sigma_sq * spectral.effective_dimension(decomp, T) / decomp.n


def tau_sdp(decomp: SpectralDecomposition, reg: Regularizer, zY: EmpiricalCoords, config: StoppingConfig) -> StoppingOutcome:
    """Smoothed discrepancy principle with the Tikhonov smoother at horizon `config.smoothing_T`."""
    _check_mode(decomp, reg, config)
    T = config.smoothing_T
    threshold = sdp_threshold(decomp, config.sigma_sq, T)
    time, hit = _search(lambda t: spectral.smoothed_risk(decomp, reg, t, T, zY) - threshold, config)
    logger.debug("tau_SDP = %s (emergency=%s, threshold=%.6g)", time, hit, threshold)
    return StoppingOutcome(time, StoppingRule.SDP, hit, threshold)


def _balancing_config(decomp, reg, sigma_sq: float, T: float, mode: StoppingMode | None) -> StoppingConfig:
    config = StoppingConfig(sigma_sq=sigma_sq, emergency_stop=T, mode=mode or _default_mode(reg, T))
    _check_mode(decomp, reg, config)
    return config


def balancing_time(
    decomp: SpectralDecomposition,
    reg: Regularizer,
    zf: EmpiricalCoords,
    sigma_sq: float,
    T: float,
    mode: StoppingMode | None = None,
) -> StoppingOutcome:
    """
    Balancing time t_n*: first t with b_t^2 <= v_t.

    With no crossing before T (only possible when v_t stays 0) the outcome is T with
    hit_emergency set, standing for t_n* = infinity.
    """
    config = _balancing_config(decomp, reg, sigma_sq, T, mode)

    def gap(t: float) -> float:
        return spectral.bias_sq(decomp, reg, t, zf) - spectral.proxy_variance(decomp, reg, t, sigma_sq)

    time, hit = _search(gap, config)
    threshold = spectral.proxy_variance(decomp, reg, time, sigma_sq) if math.isfinite(time) else math.nan
    return StoppingOutcome(time, StoppingRule.BALANCING, hit, threshold)


def smoothed_balancing_time(
    decomp: SpectralDecomposition,
    reg: Regularizer,
    zf: EmpiricalCoords,
    sigma_sq: float,
    T: float,
    mode: StoppingMode | None = None,
    lower: float = 0.0,
) -> StoppingOutcome:
    """
    Smoothed balancing time: first t >= `lower` with ||r_t(K_n) f~||_n^2 <= sigma^2 N~_n^g(t) / n.

    f~ has coordinates sqrt(w_j) zf_j with the Tikhonov smoothing weights at horizon T.
    apply_rule and the deviation estimates search from the default `lower` = 0; pass
    `lower=1` for the infimum over t >= 1.
    """
    config = _balancing_config(decomp, reg, sigma_sq, T, mode)
    weights = decomp.smoothing_weights(T)
    zf_smooth = zf.smoothed(weights)

    def threshold(t: float) -> float:
        return sigma_sq * spectral.smoothed_g_effective_dimension(decomp, reg, t, T) / decomp.n

    time, hit = _search(lambda t: spectral.bias_sq(decomp, reg, t, zf_smooth) - threshold(t), config, lower)
    return StoppingOutcome(time, StoppingRule.SMOOTHED_BALANCING, hit, threshold(time) if math.isfinite(time) else math.nan)


def oracle_time(decomp: SpectralDecomposition, reg: Regularizer, zf: EmpiricalCoords, sigma_sq: float, grid) -> StoppingOutcome:
    """Grid point minimizing the exact expected risk; ties go to the smallest time."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidInputError("Oracle grid must be a non-empty vector")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise InvalidInputError("Oracle grid must be strictly increasing")
    risks = np.array([spectral.expected_risk(decomp, reg, t, zf, sigma_sq) for t in grid])
    best = int(np.argmin(risks))
    return StoppingOutcome(float(grid[best]), StoppingRule.ORACLE, False, float(risks[best]))


def data_driven_emergency_stop(decomp: SpectralDecomposition, n: int, cap: float) -> float:
    """
    min(T_hat, cap) where T_hat solves T N_n(T) = n.

    T N_n(T) is continuous and increasing from 0, so the root is bracketed by [0, cap]
    whenever it lies below the cap.
    """
    if not cap > 0:
        raise InvalidInputError(f"cap must be positive, got {cap}")
    if decomp.rank == 0:
        return float(cap)

    def gap(T: float) -> float:
        # negated so the gap is non-increasing, as first_crossing expects
        return n - T * spectral.effective_dimension(decomp, T)

    time, hit = first_crossing(gap, 0.0, cap, get_settings().bisection_tolerance)
    return float(cap) if hit else time


def apply_rule(
    rule: StoppingRule,
    decomp: SpectralDecomposition,
    reg: Regularizer,
    config: StoppingConfig,
    *,
    zY: EmpiricalCoords | None = None,
    zf: EmpiricalCoords | None = None,
    oracle_grid=None,
) -> StoppingOutcome:
    """Evaluate one rule with its StoppingConfig; data-driven rules need zY, the others zf."""
    if rule.data_driven and zY is None:
        raise InvalidInputError(f"Rule {rule.value} needs observation coordinates")
    if not rule.data_driven and zf is None:
        raise InvalidInputError(f"Rule {rule.value} needs signal coordinates")
    if rule is StoppingRule.DP:
        return tau_dp(decomp, reg, zY, config)
    if rule is StoppingRule.SDP:
        return tau_sdp(decomp, reg, zY, config)
    if rule is StoppingRule.BALANCING:
        return balancing_time(decomp, reg, zf, config.sigma_sq, config.emergency_stop, config.mode)
    if rule is StoppingRule.SMOOTHED_BALANCING:
        return smoothed_balancing_time(decomp, reg, zf, config.sigma_sq, config.smoothing_T, config.mode)
    if oracle_grid is None:
        cap = config.cap if math.isfinite(config.cap) else get_settings().max_iter
        oracle_grid = np.arange(1, int(cap) + 1, dtype=float)
    return oracle_time(decomp, reg, zf, config.sigma_sq, oracle_grid)
