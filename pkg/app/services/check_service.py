"""
Property suite behind the `check` command.

Each check draws small random instances from one seeded generator, evaluates
the library functionals on them and counts violations of an identity or
inequality that must hold exactly (up to rounding). A check passes with zero
violations.
"""
import logging
import math
from typing import Callable, List

import numpy as np
from scipy import stats

from app.dependencies import get_settings
from app.models.kernel_model import Kernel
from app.models.regularizer_model import Regularizer
from app.models.spectral_model import EmpiricalCoords, SpectralDecomposition
from app.schemas.check_schemas import CheckReport, CheckResult
from app.schemas.stopping_schemas import ContinuousMode, StoppingConfig
from app.services import spectral_service as spectral
from app.services import stopping_service as stopping
from app.services.kernel_service import fixed_design, kernel_matrix
from app.utils.random_streams import replication_rng

logger = logging.getLogger(__name__)

REL = 1e-12
TIME_GRID = np.logspace(-3, 4, 50)
SCAN_RANGE = (1e-4, 1e6)
# Tikhonov smoothing horizon of the scanned SDP rule
SCAN_SMOOTHING_T = 100.0
# largest eigenvalue of the random spectra; keeps eta * lambda <= 1 for eta = 2.4
SPECTRUM_MAX = 0.4


def _regularizers() -> List[Regularizer]:
    return [Regularizer.tikhonov(), Regularizer.landweber(1.0), Regularizer.landweber(2.4), Regularizer.showalter()]


def _label(reg: Regularizer) -> str:
    return f"{reg.name}(eta={reg.eta})" if reg.eta is not None else reg.name


def random_decomposition(rng: np.random.Generator, n: int, lam_max: float = SPECTRUM_MAX) -> SpectralDecomposition:
    """Random orthonormal basis with a log-uniform spectrum in [1e-4, lam_max]; sometimes rank-deficient."""
    eigenvalues = np.sort(lam_max * 10.0 ** rng.uniform(-4.0, 0.0, n))[::-1]
    if n > 2 and rng.random() < 0.25:
        eigenvalues[-1] = 0.0
    basis = stats.ortho_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1))
    return SpectralDecomposition(eigenvalues, basis)


def _random_coords(rng: np.random.Generator, decomp: SpectralDecomposition) -> EmpiricalCoords:
    return spectral.coords(decomp, rng.normal(0.0, 1.0, decomp.n))


def _leq(a: float, b: float) -> bool:
    return a <= b + REL * max(abs(a), abs(b), 1.0)


def check_landweber_recursion(rng: np.random.Generator, instances: int) -> CheckResult:
    """Spectral Landweber estimate against the iteration F <- F + eta K (Y - F), t = 0..100."""
    violations = cases = 0
    worst = 0.0
    for i in range(instances):
        n = int(rng.integers(5, 51))
        kernel = Kernel.sobolev() if i % 2 == 0 else Kernel.gaussian(0.2)
        K = kernel_matrix(kernel, fixed_design(n))
        decomp = spectral.decompose(K)
        reg = Regularizer.landweber(1.0 / decomp.lambda_max)
        Y = rng.normal(0.0, 1.0, n)
        zY = spectral.coords(decomp, Y)
        fitted = np.zeros(n)
        for t in range(101):
            spectral_fit = spectral.estimate(decomp, reg, t, Y)
            gap = float(np.max(np.abs(spectral_fit - fitted)))
            worst = max(worst, gap)
            direct = float(np.mean(np.square(Y - fitted)))
            risk = spectral.empirical_risk(decomp, reg, t, zY)
            cases += 2
            violations += gap > 1e-8
            violations += abs(risk - direct) > 1e-10 * max(direct, 1e-14)
            fitted = fitted + reg.eta * (K.entries @ (Y - fitted))
    return CheckResult(
        name="landweber_recursion", passed=violations == 0, violations=violations, cases=cases,
        detail=f"max |spectral - iterative| = {worst:.3g}",
    )


def check_regularizer_axioms(rng: np.random.Generator, pairs: int, diagnostics: dict) -> CheckResult:
    """(BdF), (LFU), (LFL) for all filters and (QuErr) for Tikhonov on random (lambda, t) pairs."""
    violations = cases = 0
    details = []
    querr = []
    for reg in _regularizers():
        lam_max = 1.0 / reg.eta if reg.eta is not None else 1.0
        lams = lam_max * 10.0 ** rng.uniform(-4.0, 0.0, pairs)
        ts = 10.0 ** rng.uniform(-3.0, 3.0, pairs)
        counts = reg.check_properties(lams, ts)
        asserted = ("BdF", "LFU", "LFL", "QuErr") if reg.name == "tikhonov" else ("BdF", "LFU", "LFL")
        bad = sum(counts[axiom] for axiom in asserted)
        violations += bad
        cases += pairs * len(asserted)
        if reg.name != "tikhonov":
            querr.append(float(counts["QuErr"]))
        details.append(f"{_label(reg)}: {bad}")
    diagnostics["querr_violations"] = querr
    return CheckResult(
        name="regularizer_axioms", passed=violations == 0, violations=violations, cases=cases,
        detail="; ".join(details),
    )


def check_dimension_sandwich(decomps: List[SpectralDecomposition]) -> CheckResult:
    """0.5 N_n(t) <= N_n^g(t) <= 2 max(B, 1) N_n(t)."""
    violations = cases = 0
    for decomp in decomps:
        for reg in _regularizers():
            for t in TIME_GRID:
                N = spectral.effective_dimension(decomp, t)
                Ng = spectral.g_effective_dimension(decomp, reg, t)
                cases += 2
                violations += not _leq(0.5 * N, Ng)
                violations += not _leq(Ng, 2.0 * max(reg.B, 1.0) * N)
    return CheckResult(name="dimension_sandwich", passed=violations == 0, violations=violations, cases=cases)


def check_basic_inequality(rng: np.random.Generator, decomps: List[SpectralDecomposition]) -> CheckResult:
    """
    b_t^2 - 2 v_t <= E||Y - f_hat||_n^2 - sigma^2 <= b_t^2 - v_t, and the same sandwich for the
    Tikhonov-smoothed risk centred at sigma^2 N_n(T) / n.
    """
    violations = cases = 0
    for decomp in decomps:
        zf = _random_coords(rng, decomp)
        sigma_sq = float(rng.uniform(0.1, 2.0))
        T = float(10.0 ** rng.uniform(0.0, 3.0))
        zf_smooth = zf.smoothed(decomp.smoothing_weights(T))
        centre = sigma_sq * spectral.effective_dimension(decomp, T) / decomp.n
        for reg in _regularizers():
            for t in TIME_GRID:
                b2 = spectral.bias_sq(decomp, reg, t, zf)
                v = spectral.proxy_variance(decomp, reg, t, sigma_sq)
                excess = spectral.expected_empirical_risk(decomp, reg, t, zf, sigma_sq) - sigma_sq
                b2_s = spectral.bias_sq(decomp, reg, t, zf_smooth)
                v_s = sigma_sq * spectral.smoothed_g_effective_dimension(decomp, reg, t, T) / decomp.n
                excess_s = spectral.expected_smoothed_risk(decomp, reg, t, T, zf, sigma_sq) - centre
                cases += 4
                violations += not _leq(b2 - 2.0 * v, excess)
                violations += not _leq(excess, b2 - v)
                violations += not _leq(b2_s - 2.0 * v_s, excess_s)
                violations += not _leq(excess_s, b2_s - v_s)
    return CheckResult(name="basic_inequality", passed=violations == 0, violations=violations, cases=cases)


def _non_increasing(values: np.ndarray) -> int:
    steps = np.diff(values)
    return int(np.count_nonzero(steps > REL * np.maximum(np.abs(values[1:]), 1.0)))


def check_monotonicity(rng: np.random.Generator, decomps: List[SpectralDecomposition]) -> CheckResult:
    """Risks and bias non-increasing, dimensions and v_t non-decreasing, smoothed <= unsmoothed."""
    violations = cases = 0
    for decomp in decomps:
        zY = _random_coords(rng, decomp)
        zf = _random_coords(rng, decomp)
        T = float(10.0 ** rng.uniform(0.0, 3.0))
        for reg in _regularizers():
            risk = np.array([spectral.empirical_risk(decomp, reg, t, zY) for t in TIME_GRID])
            smoothed = np.array([spectral.smoothed_risk(decomp, reg, t, T, zY) for t in TIME_GRID])
            bias = np.array([spectral.bias_sq(decomp, reg, t, zf) for t in TIME_GRID])
            N = np.array([spectral.effective_dimension(decomp, t) for t in TIME_GRID])
            Ng = np.array([spectral.g_effective_dimension(decomp, reg, t) for t in TIME_GRID])
            Ng_s = np.array([spectral.smoothed_g_effective_dimension(decomp, reg, t, T) for t in TIME_GRID])
            v = np.array([spectral.proxy_variance(decomp, reg, t, 1.0) for t in TIME_GRID])
            for series in (risk, smoothed, bias):
                violations += _non_increasing(series)
            for series in (N, Ng, Ng_s, v):
                violations += _non_increasing(-series)
            violations += sum(not _leq(a, b) for a, b in zip(smoothed, risk))
            violations += sum(not _leq(a, b) for a, b in zip(Ng_s, Ng))
            cases += 9 * len(TIME_GRID)
    return CheckResult(name="monotonicity", passed=violations == 0, violations=violations, cases=cases)


def check_closed_form_stopping(tolerance: float) -> CheckResult:
    """Single-eigenvalue Tikhonov cases with quadratic closed forms."""
    decomp = SpectralDecomposition(np.array([1.0]), np.array([[1.0]]))
    reg = Regularizer.tikhonov()
    mode = ContinuousMode(tolerance=tolerance)
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    expected = {
        "tau_dp": 1.0,
        "balancing_time": golden - 1.0,
        "smoothed_balancing_time": golden - 1.0,
        "data_driven_emergency_stop": golden,
    }
    observed = {
        "tau_dp": stopping.tau_dp(
            decomp, reg, EmpiricalCoords(np.array([2.0])), StoppingConfig(sigma_sq=1.0, mode=mode)
        ).time,
        "balancing_time": stopping.balancing_time(
            decomp, reg, EmpiricalCoords(np.array([1.0])), 1.0, math.inf, mode
        ).time,
        "smoothed_balancing_time": stopping.smoothed_balancing_time(
            decomp, reg, EmpiricalCoords(np.array([1.0])), 1.0, 1.0, mode
        ).time,
        "data_driven_emergency_stop": stopping.data_driven_emergency_stop(decomp, 1, 1e6),
    }
    wrong = [name for name in expected if abs(observed[name] - expected[name]) > 1e-6]
    return CheckResult(
        name="closed_form_stopping", passed=not wrong, violations=len(wrong), cases=len(expected),
        detail=", ".join(f"{name}={observed[name]:.9g}" for name in expected),
    )


def _first_scan_time(grid: np.ndarray, gap: np.ndarray) -> tuple[int, bool]:
    hits = np.flatnonzero(gap <= 0.0)
    return (int(hits[0]), True) if hits.size else (grid.size, False)


def _agrees(grid: np.ndarray, time: float, hit: bool, gap: np.ndarray, tolerance: float) -> bool:
    index, found = _first_scan_time(grid, gap)
    if not found:
        return hit
    if hit:
        return False
    lower = grid[index - 1] if index > 0 else 0.0
    slack = tolerance * grid[index] + 1e-12
    return lower - slack <= time <= grid[index] + slack


def check_grid_scan(rng: np.random.Generator, instances: int, points: int, tolerance: float) -> CheckResult:
    """Continuous tau_DP, tau_SDP, t_n* and T_hat against the first crossing on a dense log-spaced scan."""
    grid = np.logspace(math.log10(SCAN_RANGE[0]), math.log10(SCAN_RANGE[1]), points)
    cap = SCAN_RANGE[1]
    mode = ContinuousMode(tolerance=tolerance)
    violations = cases = 0
    for _ in range(instances):
        n = int(rng.integers(2, 31))
        decomp = random_decomposition(rng, n, lam_max=1.0)
        lam = decomp.eigenvalues
        zf = _random_coords(rng, decomp)
        zY = EmpiricalCoords(zf.coeffs + spectral.coords(decomp, rng.normal(0.0, 1.0, n)).coeffs)
        sigma_sq = float(rng.uniform(0.2, 1.0))
        weights = decomp.smoothing_weights(SCAN_SMOOTHING_T)
        sdp_config = StoppingConfig(sigma_sq=sigma_sq, emergency_stop=cap, smoothing_T=SCAN_SMOOTHING_T, mode=mode)
        for reg in (Regularizer.tikhonov(), Regularizer.showalter()):
            # both filters depend on lambda * t only
            phi = reg.lambda_g(1.0, np.outer(grid, lam))
            r2 = np.square(1.0 - phi)
            dp = stopping.tau_dp(decomp, reg, zY, StoppingConfig(sigma_sq=sigma_sq, emergency_stop=cap, mode=mode))
            balancing = stopping.balancing_time(decomp, reg, zf, sigma_sq, cap, mode)
            sdp = stopping.tau_sdp(decomp, reg, zY, sdp_config)
            cases += 3
            violations += not _agrees(grid, dp.time, dp.hit_emergency, r2 @ np.square(zY.coeffs) - sigma_sq, tolerance)
            violations += not _agrees(
                grid, sdp.time, sdp.hit_emergency, r2 @ (weights * np.square(zY.coeffs)) - sdp.threshold_at_stop, tolerance,
            )
            violations += not _agrees(
                grid, balancing.time, balancing.hit_emergency,
                r2 @ np.square(zf.coeffs) - sigma_sq * phi.sum(axis=1) / n, tolerance,
            )
        N = Regularizer.tikhonov().lambda_g(1.0, np.outer(grid, lam)).sum(axis=1)
        T_hat = stopping.data_driven_emergency_stop(decomp, n, cap)
        cases += 1
        violations += not _agrees(grid, T_hat, T_hat >= cap, n - grid * N, tolerance)
    return CheckResult(
        name="grid_scan_agreement", passed=violations == 0, violations=violations, cases=cases,
        detail=f"{points} log-spaced points on [{SCAN_RANGE[0]:g}, {SCAN_RANGE[1]:g}]",
    )


def run_checks(seed: int | None = None) -> CheckReport:
    """Run the whole property suite from one seed."""
    settings = get_settings()
    seed = settings.seed if seed is None else seed
    rng = replication_rng(seed, 0)
    instances = settings.check_instances
    diagnostics: dict = {}
    decomps = [random_decomposition(rng, int(rng.integers(2, 51))) for _ in range(instances)]
    diagnostics["effective_rank"] = [spectral.effective_rank_diagnostic(d, 100.0) for d in decomps]

    suite: List[Callable[[], CheckResult]] = [
        lambda: check_landweber_recursion(rng, instances),
        lambda: check_regularizer_axioms(rng, settings.check_pairs, diagnostics),
        lambda: check_dimension_sandwich(decomps),
        lambda: check_basic_inequality(rng, decomps),
        lambda: check_monotonicity(rng, decomps),
        lambda: check_closed_form_stopping(settings.bisection_tolerance),
        lambda: check_grid_scan(rng, instances, settings.scan_points, settings.bisection_tolerance),
    ]
    checks = []
    for run in suite:
        result = run()
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(level, "%-22s %s (%d/%d violations) %s",
                   result.name, "ok" if result.passed else "FAILED", result.violations, result.cases, result.detail)
        checks.append(result)
    return CheckReport(seed=seed, checks=checks, diagnostics=diagnostics)
