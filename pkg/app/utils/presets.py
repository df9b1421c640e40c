"""
Named experiment presets for the simulation study.

A preset fixes kernel, filter, signal, noise level, rules and emergency stops;
overrides are applied on top of the expanded preset and the result is validated
as an ExperimentConfig.
"""
import logging
import math
from typing import Any, Iterable, Optional

from app.exceptions import InvalidInputError
from app.models.stopping_model import StoppingRule
from app.schemas.experiment_schemas import ExperimentConfig, KernelSpec, RegularizerSpec, SignalSpec
from app.schemas.stopping_schemas import IntegerGridMode
from app.services import spectral_service as spectral
from app.services import stopping_service as stopping
from app.services.kernel_service import fixed_design, kernel_matrix

logger = logging.getLogger(__name__)

PRESETS = ("inner-sobolev", "inner-gaussian", "outer-sobolev", "custom")
SWEEP_SIZES = (200, 400, 600, 800, 1000)
DEFAULT_N = 200
DEFAULT_REPLICATIONS = 50
INNER_T_MAX = 500
SOBOLEV_ETA = 2.4
GAUSSIAN_ETA = 0.5
GAUSSIAN_BANDWIDTH = 0.02

INNER_RULES = (StoppingRule.ORACLE, StoppingRule.BALANCING, StoppingRule.DP, StoppingRule.SDP)
OUTER_RULES = (StoppingRule.ORACLE, StoppingRule.DP, StoppingRule.SDP)


def outer_t_max(n: int) -> int:
    """Integer-grid horizon of the outer case: 500, 1000, 2000 or 3000 depending on n."""
    if n <= 400:
        return 500
    if n <= 600:
        return 1000
    if n <= 800:
        return 2000
    return 3000


def inner_sdp_stop(n: int) -> int:
    """ceil(4 sqrt(n))."""
    return math.ceil(4.0 * math.sqrt(n))


def outer_sdp_stop(n: int) -> int:
    """ceil(2 n / log n); n = 1 has no finite value and falls back to 1."""
    if n < 2:
        return 1
    return math.ceil(2.0 * n / math.log(n))


def data_driven_sdp_stop(config: ExperimentConfig, deterministic: int) -> int:
    """ceil(min(T_hat, deterministic)) with T_hat solving T N_n(T) = n on this design."""
    decomp = spectral.decompose(kernel_matrix(config.kernel.build(), fixed_design(config.n)))
    T_hat = stopping.data_driven_emergency_stop(decomp, config.n, float(deterministic))
    stop = max(1, min(math.ceil(T_hat), deterministic))
    logger.info("Data-driven emergency stop T_hat=%.4g, SDP stop %d (deterministic %d)", T_hat, stop, deterministic)
    return stop


def _rule_entry(rule: StoppingRule, sigma_sq: float, t_max: int, sdp_stop: int) -> dict:
    emergency = sdp_stop if rule is StoppingRule.SDP else t_max
    return {
        "rule": rule,
        "stopping": {
            "sigma_sq": sigma_sq,
            "emergency_stop": emergency,
            "mode": IntegerGridMode(max_iter=t_max),
        },
    }


def _parse_rules(rules: Iterable[str | StoppingRule]) -> list[StoppingRule]:
    try:
        return [StoppingRule(r) for r in rules]
    except ValueError as e:
        choices = ", ".join(r.value for r in StoppingRule)
        raise InvalidInputError(f"Unknown stopping rule ({e}); choose from {choices}") from e


def expand_preset(preset: str, n: Optional[int] = None, **overrides: Any) -> ExperimentConfig:
    """
    Expand a preset into a validated ExperimentConfig, then apply overrides.

    Recognized overrides: replications, seed, eta, sigma_sq, t_max, rules, kernel, bandwidth,
    signal, regularizer, sdp_emergency ("deterministic" or "data-driven"). `None` values
    are ignored.

    Raises:
        InvalidInputError: Unknown preset, unknown override, missing n for the custom
            preset, or an invalid resulting configuration.
    """
    if preset not in PRESETS:
        raise InvalidInputError(f"Unknown preset '{preset}'; choose from {', '.join(PRESETS)}")
    if preset == "custom" and n is None:
        raise InvalidInputError("The custom preset needs an explicit n")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    known = {"replications", "seed", "eta", "sigma_sq", "t_max", "rules", "kernel", "bandwidth",
             "signal", "regularizer", "sdp_emergency"}
    unknown = set(overrides) - known
    if unknown:
        raise InvalidInputError(f"Unknown preset overrides: {', '.join(sorted(unknown))}")
    n = DEFAULT_N if n is None else n
    if n < 1:
        raise InvalidInputError(f"n must be at least 1, got {n}")

    outer = preset == "outer-sobolev" or overrides.get("signal") == "outer"
    gaussian = preset == "inner-gaussian" or overrides.get("kernel") == "gaussian"
    reg_name = overrides.get("regularizer", "landweber")
    eta = overrides.get("eta", GAUSSIAN_ETA if gaussian else SOBOLEV_ETA)
    try:
        kernel = KernelSpec(
            name="gaussian" if gaussian else "sobolev",
            bandwidth=overrides.get("bandwidth", GAUSSIAN_BANDWIDTH) if gaussian else None,
        )
        regularizer = RegularizerSpec(name=reg_name, eta=eta if reg_name == "landweber" else None)
    except ValueError as e:
        raise InvalidInputError(f"Invalid kernel or regularizer for preset {preset}: {e}") from e
    signal = SignalSpec(variant="outer" if outer else "inner")
    sigma_sq = float(overrides.get("sigma_sq", 1.0))
    t_max = int(overrides.get("t_max", outer_t_max(n) if outer else INNER_T_MAX))
    sdp_stop = min(outer_sdp_stop(n) if outer else inner_sdp_stop(n), t_max)
    rules = _parse_rules(overrides.get("rules", OUTER_RULES if outer else INNER_RULES))

    def build(sdp_stop: int) -> ExperimentConfig:
        try:
            return ExperimentConfig(
                n=n,
                kernel=kernel,
                regularizer=regularizer,
                signal=signal,
                sigma_sq=sigma_sq,
                replications=overrides.get("replications", DEFAULT_REPLICATIONS),
                rules=[_rule_entry(rule, sigma_sq, t_max, sdp_stop) for rule in rules],
                t_max=t_max,
                seed=overrides.get("seed", 0),
                preset=preset,
            )
        except ValueError as e:
            raise InvalidInputError(f"Invalid configuration for preset {preset}: {e}") from e

    config = build(sdp_stop)
    sdp_emergency = overrides.get("sdp_emergency", "deterministic")
    if sdp_emergency not in ("deterministic", "data-driven"):
        raise InvalidInputError(f"sdp_emergency must be 'deterministic' or 'data-driven', got {sdp_emergency}")
    if sdp_emergency == "data-driven" and StoppingRule.SDP in rules:
        config = build(data_driven_sdp_stop(config, sdp_stop))
    return config
