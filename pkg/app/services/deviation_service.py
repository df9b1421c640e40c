"""
Monte Carlo estimates of the deviation probabilities of the discrepancy-type rules.

For tau_DP the reference is the balancing time t_n*:
    {tau_DP > t}, {v_tau > v_t* + y}, {b_tau^2 > 2 b_t*^2 + y}.
For tau_SDP the reference is the smoothed balancing time and the smoothed
counterparts of the proxy variance and squared bias are compared.
The events are nested in the target, so frequencies computed on one set of
replications are non-increasing in it.
"""
import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from app.dependencies import get_settings
from app.exceptions import EarlyStopError, InvalidInputError, ReplicationError
from app.models.stopping_model import StoppingRule
from app.schemas.experiment_schemas import DeviationEstimate, DeviationRow, ExperimentConfig
from app.services import spectral_service as spectral
from app.services import stopping_service as stopping
from app.services.simulation_service import ExperimentSetup, map_replications, prepare
from app.utils.random_streams import draw_noise, replication_rng
from app.utils.statistics import wilson_interval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _StoppedQuantities:
    """Stopping time with the variance- and bias-type quantities evaluated there."""
    time: float
    variance: float
    bias: float


def _dp_quantities(setup: ExperimentSetup, t: float) -> _StoppedQuantities:
    sigma_sq = setup.config.sigma_sq
    return _StoppedQuantities(
        t,
        spectral.proxy_variance(setup.decomp, setup.reg, t, sigma_sq),
        spectral.bias_sq(setup.decomp, setup.reg, t, setup.zf),
    )


def _sdp_quantities(setup: ExperimentSetup, t: float, T: float) -> _StoppedQuantities:
    decomp, reg = setup.decomp, setup.reg
    zf_smooth = setup.zf.smoothed(decomp.smoothing_weights(T))
    return _StoppedQuantities(
        t,
        setup.config.sigma_sq * spectral.smoothed_g_effective_dimension(decomp, reg, t, T) / decomp.n,
        spectral.bias_sq(decomp, reg, t, zf_smooth),
    )


def _deviation_task(setup: ExperimentSetup, index: int) -> tuple[float, float]:
    config = setup.config
    dp = config.rule_config(StoppingRule.DP)
    sdp = config.rule_config(StoppingRule.SDP)
    try:
        rng = replication_rng(config.seed, index)
        noise = draw_noise(setup.decomp.n, config.sigma_sq, rng)
        zY = spectral.coords(setup.decomp, setup.f + noise)
        tau_dp = stopping.tau_dp(setup.decomp, setup.reg, zY, dp.stopping).time
        tau_sdp = stopping.tau_sdp(setup.decomp, setup.reg, zY, sdp.stopping).time if sdp else math.nan
    except EarlyStopError as e:
        raise ReplicationError(f"Replication failed: {e}", config.seed, index) from e
    return tau_dp, tau_sdp


def _row(event: str, rule: StoppingRule, target: float, hits: np.ndarray) -> DeviationRow:
    successes = int(np.count_nonzero(hits))
    lower, upper = wilson_interval(successes, hits.size)
    return DeviationRow(
        event=event,
        rule=rule,
        target=float(target),
        frequency=successes / hits.size,
        wilson_lower=lower,
        wilson_upper=upper,
    )


def _event_rows(
    rule: StoppingRule,
    stopped: Sequence[_StoppedQuantities],
    reference: _StoppedQuantities,
    ts: Sequence[float],
    ys: Sequence[float],
) -> list[DeviationRow]:
    times = np.array([s.time for s in stopped])
    variances = np.array([s.variance for s in stopped])
    biases = np.array([s.bias for s in stopped])
    rows = [_row("tau_exceeds", rule, t, times > t) for t in ts]
    rows += [_row("variance_exceeds", rule, y, variances > reference.variance + y) for y in ys]
    rows += [_row("bias_exceeds", rule, y, biases > 2.0 * reference.bias + y) for y in ys]
    return rows


def _validate_targets(values: Sequence[float], name: str) -> list[float]:
    values = [float(v) for v in values]
    if any(not math.isfinite(v) for v in values):
        raise InvalidInputError(f"Deviation targets {name} must be finite")
    return sorted(values)


def estimate_deviation(
    config: ExperimentConfig,
    ts: Sequence[float] = (),
    ys: Sequence[float] = (),
    jobs: int | None = None,
) -> DeviationEstimate:
    """
    Exceedance frequencies of tau_DP (and tau_SDP when configured) with Wilson 95% intervals.

    Args:
        config: Experiment configuration; must contain the dp rule.
        ts: Time targets for {tau > t}; each must exceed the balancing time t_n*.
        ys: Offsets y > 0 for the variance and bias exceedance events.

    Raises:
        InvalidInputError: When the dp rule is missing, no target is given, a time target
            does not exceed t_n*, or an offset is not positive.
        ReplicationError: When a replication fails.
    """
    dp = config.rule_config(StoppingRule.DP)
    if dp is None:
        raise InvalidInputError("Deviation estimates need the dp rule in the configuration")
    ts = _validate_targets(ts, "ts")
    ys = _validate_targets(ys, "ys")
    if not ts and not ys:
        raise InvalidInputError("Give at least one time target (ts) or offset (ys)")
    if any(y <= 0 for y in ys):
        raise InvalidInputError("Offsets y must be positive")
    jobs = get_settings().jobs if jobs is None else jobs

    setup = prepare(config)
    decomp, reg, sigma_sq = setup.decomp, setup.reg, config.sigma_sq
    t_star = stopping.balancing_time(decomp, reg, setup.zf, sigma_sq, dp.stopping.emergency_stop, dp.stopping.mode).time
    too_early = [t for t in ts if t <= t_star]
    if too_early:
        raise InvalidInputError(f"Time targets {too_early} do not exceed the balancing time t_n* = {t_star:.6g}")

    sdp = config.rule_config(StoppingRule.SDP)
    t_star_smooth = None
    if sdp is not None:
        T = sdp.stopping.smoothing_T
        t_star_smooth = stopping.smoothed_balancing_time(
            decomp, reg, setup.zf, sigma_sq, T, sdp.stopping.mode
        ).time
    logger.info("Balancing times: t_n* = %.6g, smoothed = %s", t_star, t_star_smooth)

    taus = map_replications(partial(_deviation_task, setup), config.replications, jobs)

    rows = _event_rows(
        StoppingRule.DP,
        [_dp_quantities(setup, tau) for tau, _ in taus],
        _dp_quantities(setup, t_star),
        ts,
        ys,
    )
    if sdp is not None:
        T = sdp.stopping.smoothing_T
        sdp_ts = [t for t in ts if t > t_star_smooth]
        if len(sdp_ts) < len(ts):
            logger.warning(
                "Skipping SDP time targets %s not above the smoothed balancing time %.6g",
                [t for t in ts if t <= t_star_smooth], t_star_smooth,
            )
        rows += _event_rows(
            StoppingRule.SDP,
            [_sdp_quantities(setup, tau, T) for _, tau in taus],
            _sdp_quantities(setup, t_star_smooth, T),
            sdp_ts,
            ys,
        )
    logger.info("Estimated %d deviation frequencies from %d replications", len(rows), config.replications)
    return DeviationEstimate(
        config=config,
        balancing_time=t_star,
        smoothed_balancing_time=t_star_smooth,
        rows=rows,
    )
