"""
Monte Carlo experiment engine for the fixed-design simulation study.

One kernel matrix is decomposed per experiment and shared, read-only, by every
replication. Replication i draws its noise from the stream `replication_rng(seed, i)`
and aggregates are accumulated in replication order, so serial and parallel runs
produce identical results.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence, TypeVar

import numpy as np

from app.dependencies import get_settings
from app.exceptions import EarlyStopError, InvalidInputError, ReplicationError
from app.models.kernel_model import Design
from app.models.regularizer_model import Regularizer
from app.models.spectral_model import EmpiricalCoords, SpectralDecomposition
from app.models.stopping_model import StoppingOutcome, StoppingRule
from app.schemas.experiment_schemas import (
    ExperimentConfig,
    ExperimentResult,
    Histogram,
    RuleConfig,
    RuleSummary,
    SignalSpec,
)
from app.services import spectral_service as spectral
from app.services import stopping_service as stopping
from app.services.kernel_service import fixed_design, kernel_matrix
from app.utils.random_streams import draw_noise, replication_rng
from app.utils.signals import inner_values, outer_values
from app.utils.statistics import histogram, mean_and_sd

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class RuleOutcome:
    """Stopping time and realized loss of one rule in one replication."""
    rule: StoppingRule
    time: float
    loss: float
    hit_emergency: bool


@dataclass(frozen=True)
class ExperimentSetup:
    """Everything a replication needs, computed once per experiment."""
    config: ExperimentConfig
    design: Design
    decomp: SpectralDecomposition
    reg: Regularizer
    f: np.ndarray
    zf: EmpiricalCoords
    fixed: dict


def signal_values(signal: SignalSpec, design: Design) -> np.ndarray:
    """The noiseless vector f = (f(x_1), ..., f(x_n))."""
    if signal.variant == "outer":
        return outer_values(design.points)
    if signal.variant == "inner":
        return inner_values(design.points)
    values = np.asarray(signal.values, dtype=float)
    if values.size != design.n:
        raise InvalidInputError(f"Custom signal has {values.size} values, design has {design.n} points")
    return values


def generate_sample(signal: SignalSpec, design: Design, sigma_sq: float, rng: np.random.Generator) -> np.ndarray:
    """Y_i = f(x_i) + eps_i with eps_i i.i.d. N(0, sigma^2)."""
    return signal_values(signal, design) + draw_noise(design.n, sigma_sq, rng)


def realized_loss(decomp: SpectralDecomposition, reg: Regularizer, t: float, zf: EmpiricalCoords, zY: EmpiricalCoords) -> float:
    """||f - f_hat^(t)||_n^2 computed in empirical coordinates."""
    phi = reg.lambda_g(t, decomp.eigenvalues)
    return float(np.sum(np.square(zf.coeffs - phi * zY.coeffs)))


def fixed_outcomes(decomp: SpectralDecomposition, reg: Regularizer, zf: EmpiricalCoords, rules: Sequence[RuleConfig]) -> dict:
    """Outcomes of the rules that do not look at the data, computed once."""
    return {
        rc.rule: stopping.apply_rule(rc.rule, decomp, reg, rc.stopping, zf=zf)
        for rc in rules
        if not rc.rule.data_driven
    }


def run_replication(
    decomp: SpectralDecomposition,
    reg: Regularizer,
    zf: EmpiricalCoords,
    rules: Sequence[RuleConfig],
    sigma_sq: float,
    rng: np.random.Generator,
    fixed: dict | None = None,
) -> list[RuleOutcome]:
    """
    One draw of the noise, every requested rule evaluated on the same data.

    Args:
        fixed: Precomputed outcomes of the data-independent rules; computed here when omitted.

    Returns:
        list[RuleOutcome]: One entry per rule, in the order of `rules`.
    """
    noise = draw_noise(decomp.n, sigma_sq, rng)
    zY = EmpiricalCoords(zf.coeffs + spectral.coords(decomp, noise).coeffs)
    if fixed is None:
        fixed = fixed_outcomes(decomp, reg, zf, rules)
    outcomes = []
    for rc in rules:
        outcome: StoppingOutcome = fixed[rc.rule] if rc.rule in fixed else stopping.apply_rule(rc.rule, decomp, reg, rc.stopping, zY=zY)
        loss = realized_loss(decomp, reg, outcome.time, zf, zY)
        outcomes.append(RuleOutcome(rc.rule, outcome.time, loss, outcome.hit_emergency))
    return outcomes


def prepare(config: ExperimentConfig) -> ExperimentSetup:
    """Design, decomposition, signal coordinates and data-independent outcomes of an experiment."""
    design = fixed_design(config.n)
    decomp = spectral.decompose(kernel_matrix(config.kernel.build(), design))
    reg = config.regularizer.build()
    reg.check_stability(decomp.lambda_max)
    f = signal_values(config.signal, design)
    zf = spectral.coords(decomp, f)
    fixed = fixed_outcomes(decomp, reg, zf, config.rules)
    logger.info(
        "Prepared %s/%s experiment: n=%d, lambda_1=%.4g, rank=%d",
        config.kernel.name, reg.name, config.n, decomp.lambda_max, decomp.rank,
    )
    return ExperimentSetup(config, design, decomp, reg, f, zf, fixed)


def _replication_task(setup: ExperimentSetup, index: int) -> list[RuleOutcome]:
    config = setup.config
    try:
        rng = replication_rng(config.seed, index)
        return run_replication(setup.decomp, setup.reg, setup.zf, config.rules, config.sigma_sq, rng, setup.fixed)
    except EarlyStopError as e:
        raise ReplicationError(f"Replication failed: {e}", config.seed, index) from e


def map_replications(task: Callable[[int], T], count: int, jobs: int = 1) -> list[T]:
    """Apply `task` to replication indices 0..count-1; results come back in index order."""
    if jobs <= 1:
        return [task(i) for i in range(count)]
    chunksize = max(1, count // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(task, range(count), chunksize=chunksize))


def replicate(setup: ExperimentSetup, jobs: int = 1) -> list[list[RuleOutcome]]:
    """All replications of an experiment, in replication order."""
    return map_replications(partial(_replication_task, setup), setup.config.replications, jobs)


def summarize(config: ExperimentConfig, records: list[list[RuleOutcome]], bins: int) -> list[RuleSummary]:
    summaries = []
    for position, rc in enumerate(config.rules):
        outcomes = [rep[position] for rep in records]
        losses = np.array([o.loss for o in outcomes])
        times = np.array([o.time for o in outcomes])
        mean_loss, sd_loss = mean_and_sd(losses)
        mean_tau, sd_tau = mean_and_sd(times)
        upper = rc.stopping.cap
        if not np.isfinite(upper):
            finite = times[np.isfinite(times)]
            upper = float(finite.max()) if finite.size and finite.max() > 0 else 1.0
        edges, counts = histogram(times, bins, upper)
        summaries.append(
            RuleSummary(
                rule=rc.rule,
                n=config.n,
                replications=len(outcomes),
                mean_loss=mean_loss,
                sd_loss=sd_loss,
                mean_tau=mean_tau,
                sd_tau=sd_tau,
                emergency_rate=float(np.mean([o.hit_emergency for o in outcomes])),
                histogram=Histogram(edges=edges, counts=counts),
            )
        )
        logger.info("%-18s mean loss %.6g (sd %.3g), mean tau %.4g", rc.rule.value, mean_loss, sd_loss, mean_tau)
    return summaries


def run_experiment(config: ExperimentConfig, jobs: int | None = None) -> ExperimentResult:
    """
    Run N independent replications of one configuration and aggregate per-rule statistics.

    Raises:
        ReplicationError: When a replication fails; carries the seed and replication index.
    """
    settings = get_settings()
    jobs = settings.jobs if jobs is None else jobs
    started = time.perf_counter()
    setup = prepare(config)
    records = replicate(setup, jobs)
    summaries = summarize(config, records, settings.histogram_bins)
    wall_time = time.perf_counter() - started
    logger.info("Experiment n=%d with %d replications finished in %.2fs", config.n, config.replications, wall_time)
    return ExperimentResult(config=config, rules=summaries, wall_time=wall_time)
