import math

import numpy as np
import pytest

from app.exceptions import InvalidInputError, UnsupportedModeError
from app.models.spectral_model import EmpiricalCoords, SpectralDecomposition
from app.models.stopping_model import StoppingRule
from app.schemas.stopping_schemas import ContinuousMode, IntegerGridMode, StoppingConfig
from app.services import spectral_service as spectral
from app.services.stopping_service import (
    apply_rule,
    balancing_time,
    data_driven_emergency_stop,
    oracle_time,
    sdp_threshold,
    smoothed_balancing_time,
    tau_dp,
    tau_sdp,
)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def coords(*values):
    return EmpiricalCoords(np.array(values, dtype=float))


# Test the discrepancy principle on one eigenvalue: 4 / (1 + t)^2 <= 1 at t = 1
def test_tau_dp_single_eigenvalue(single_eigen, tikhonov, continuous):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=10.0, mode=continuous)
    outcome = tau_dp(single_eigen, tikhonov, coords(2.0), config)
    assert outcome.time == pytest.approx(1.0, rel=1e-8)
    assert outcome.rule is StoppingRule.DP
    assert not outcome.hit_emergency
    assert outcome.threshold_at_stop == 1.0

def test_tau_dp_on_integer_grid(single_eigen, tikhonov):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=10.0, mode=IntegerGridMode(max_iter=100))
    assert tau_dp(single_eigen, tikhonov, coords(3.0), config).time == 2.0

def test_tau_dp_is_zero_when_data_already_fit(single_eigen, tikhonov, continuous):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=10.0, mode=continuous)
    outcome = tau_dp(single_eigen, tikhonov, coords(0.5), config)
    assert outcome.time == 0.0
    assert not outcome.hit_emergency

# Test a null-space component keeps the residual above a zero threshold forever
def test_tau_dp_hits_emergency_without_noise(tikhonov, continuous):
    decomp = SpectralDecomposition(np.array([1.0, 0.0]), np.eye(2))
    config = StoppingConfig(sigma_sq=0.0, emergency_stop=50.0, mode=continuous)
    outcome = tau_dp(decomp, tikhonov, coords(1.0, 0.3), config)
    assert outcome.time == 50.0
    assert outcome.hit_emergency

def test_tau_dp_with_zero_kernel(tikhonov):
    decomp = SpectralDecomposition(np.zeros(1), np.eye(1))
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=20.0, mode=IntegerGridMode(max_iter=100))
    outcome = tau_dp(decomp, tikhonov, coords(2.0), config)
    assert outcome.time == 20.0
    assert outcome.hit_emergency
    assert tau_dp(decomp, tikhonov, coords(0.5), config).time == 0.0

def test_tau_dp_grid_respects_max_iter(single_eigen, tikhonov):
    config = StoppingConfig(sigma_sq=1e-6, emergency_stop=math.inf, mode=IntegerGridMode(max_iter=7))
    outcome = tau_dp(single_eigen, tikhonov, coords(2.0), config)
    assert outcome.time == 7.0
    assert outcome.hit_emergency

def test_tau_dp_decreases_with_noise_level(sobolev_decomp, inner_zf, tikhonov, rng):
    noise = rng.standard_normal(sobolev_decomp.n) * 0.3
    zY = EmpiricalCoords(inner_zf.coeffs + spectral.coords(sobolev_decomp, noise).coeffs)
    times = [
        tau_dp(sobolev_decomp, tikhonov, zY, StoppingConfig(sigma_sq=s, emergency_stop=1e4, mode=ContinuousMode())).time
        for s in (0.01, 0.05, 0.09, 0.2)
    ]
    assert times == sorted(times, reverse=True)

def test_sdp_threshold(single_eigen):
    assert sdp_threshold(single_eigen, 2.0, 1.0) == pytest.approx(1.0)
    assert sdp_threshold(single_eigen, 2.0, math.inf) == pytest.approx(2.0)

# Test the smoothed rule at T = 1: 0.5 * 4 / (1 + t)^2 <= 0.5 at t = 1
def test_tau_sdp_single_eigenvalue(single_eigen, tikhonov, continuous):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=1.0, mode=continuous)
    outcome = tau_sdp(single_eigen, tikhonov, coords(2.0), config)
    assert outcome.time == pytest.approx(1.0, rel=1e-8)
    assert outcome.threshold_at_stop == pytest.approx(0.5)
    assert outcome.rule is StoppingRule.SDP

def test_tau_sdp_uses_its_own_smoothing_horizon(single_eigen, tikhonov, continuous):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=10.0, smoothing_T=1.0, mode=continuous)
    assert tau_sdp(single_eigen, tikhonov, coords(2.0), config).time == pytest.approx(1.0, rel=1e-8)

# Test 1 / (1 + t)^2 <= t / (1 + t) first holds at the inverse golden ratio
def test_balancing_time_single_eigenvalue(single_eigen, tikhonov, continuous):
    outcome = balancing_time(single_eigen, tikhonov, coords(1.0), 1.0, 100.0, continuous)
    assert outcome.time == pytest.approx(GOLDEN - 1.0, rel=1e-8)
    assert outcome.rule is StoppingRule.BALANCING
    assert outcome.threshold_at_stop == pytest.approx(outcome.time / (1.0 + outcome.time))

def test_balancing_time_on_grid_rounds_up(single_eigen, tikhonov):
    outcome = balancing_time(single_eigen, tikhonov, coords(1.0), 1.0, 100.0, IntegerGridMode(max_iter=100))
    assert outcome.time == 1.0

def test_balancing_time_default_mode_is_continuous_for_tikhonov(single_eigen, tikhonov):
    assert balancing_time(single_eigen, tikhonov, coords(1.0), 1.0, 100.0).time == pytest.approx(GOLDEN - 1.0, rel=1e-6)

def test_balancing_time_without_variance_is_infinite(tikhonov):
    decomp = SpectralDecomposition(np.zeros(1), np.eye(1))
    outcome = balancing_time(decomp, tikhonov, coords(1.0), 1.0, math.inf)
    assert math.isinf(outcome.time)
    assert outcome.hit_emergency

def test_smoothed_balancing_time_single_eigenvalue(single_eigen, tikhonov, continuous):
    outcome = smoothed_balancing_time(single_eigen, tikhonov, coords(1.0), 1.0, 1.0, continuous)
    assert outcome.time == pytest.approx(GOLDEN - 1.0, rel=1e-8)
    assert outcome.rule is StoppingRule.SMOOTHED_BALANCING

def test_smoothed_balancing_time_lower_bound(single_eigen, tikhonov, continuous):
    outcome = smoothed_balancing_time(single_eigen, tikhonov, coords(1.0), 1.0, 1.0, continuous, lower=1.0)
    assert outcome.time == 1.0

# Test eta * lambda_1 = 1.44 is stable but leaves 1 - eta * lambda_1 < 0, so only integer times exist
def test_balancing_rejects_fractional_landweber(landweber, continuous):
    decomp = SpectralDecomposition(np.array([0.6, 0.1]), np.eye(2))
    with pytest.raises(UnsupportedModeError):
        balancing_time(decomp, landweber, coords(1.0, 0.5), 0.01, 100.0, continuous)
    time = balancing_time(decomp, landweber, coords(1.0, 0.5), 0.01, 100.0).time
    assert time == float(int(time))

def test_balancing_landweber_grid(sobolev_decomp, inner_zf, landweber):
    outcome = balancing_time(sobolev_decomp, landweber, inner_zf, 0.01, 500.0)
    assert outcome.time == float(int(outcome.time))
    assert 0.0 < outcome.time <= 500.0

# Test T N_n(T) = n has the golden ratio as its root for one unit eigenvalue
def test_data_driven_emergency_stop(single_eigen):
    assert data_driven_emergency_stop(single_eigen, 1, 100.0) == pytest.approx(GOLDEN, rel=1e-8)
    assert data_driven_emergency_stop(single_eigen, 1, 1.0) == 1.0

def test_data_driven_emergency_stop_zero_kernel():
    decomp = SpectralDecomposition(np.zeros(2), np.eye(2))
    assert data_driven_emergency_stop(decomp, 2, 30.0) == 30.0
    with pytest.raises(InvalidInputError):
        data_driven_emergency_stop(decomp, 2, 0.0)

def test_oracle_time_minimizes_expected_risk(sobolev_decomp, inner_zf, tikhonov):
    grid = np.arange(1.0, 201.0)
    outcome = oracle_time(sobolev_decomp, tikhonov, inner_zf, 0.01, grid)
    risks = [spectral.expected_risk(sobolev_decomp, tikhonov, t, inner_zf, 0.01) for t in grid]
    assert outcome.time == grid[int(np.argmin(risks))]
    assert outcome.threshold_at_stop == pytest.approx(min(risks))
    assert not outcome.hit_emergency

def test_oracle_time_ties_go_to_first_grid_point(single_eigen, tikhonov):
    assert oracle_time(single_eigen, tikhonov, coords(0.0), 0.0, [1.0, 2.0, 3.0]).time == 1.0

@pytest.mark.parametrize("grid", [[], [2.0, 1.0], [[1.0, 2.0]]])
def test_oracle_time_rejects_bad_grids(single_eigen, tikhonov, grid):
    with pytest.raises(InvalidInputError):
        oracle_time(single_eigen, tikhonov, coords(1.0), 1.0, grid)

def test_apply_rule_dispatch(single_eigen, tikhonov, continuous):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=1.0, mode=continuous)
    assert apply_rule(StoppingRule.SDP, single_eigen, tikhonov, config, zY=coords(2.0)).time == pytest.approx(1.0)
    smoothed = apply_rule(StoppingRule.SMOOTHED_BALANCING, single_eigen, tikhonov, config, zf=coords(1.0))
    assert smoothed.time == pytest.approx(GOLDEN - 1.0, rel=1e-8)

def test_apply_rule_oracle_uses_default_grid(single_eigen, tikhonov):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=5.0, mode=IntegerGridMode(max_iter=100))
    outcome = apply_rule(StoppingRule.ORACLE, single_eigen, tikhonov, config, zf=coords(1.0))
    assert outcome.time in (1.0, 2.0, 3.0, 4.0, 5.0)

def test_apply_rule_needs_matching_coordinates(single_eigen, tikhonov):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=5.0)
    with pytest.raises(InvalidInputError):
        apply_rule(StoppingRule.DP, single_eigen, tikhonov, config, zf=coords(1.0))
    with pytest.raises(InvalidInputError):
        apply_rule(StoppingRule.BALANCING, single_eigen, tikhonov, config, zY=coords(1.0))

# Test eta * lambda_1 < 1 on the n = 50 Sobolev design still leaves Landweber on integer times
def test_landweber_defaults_to_integer_grid(sobolev_decomp, inner_zf, landweber):
    assert landweber.eta * sobolev_decomp.lambda_max < 1.0
    balancing = balancing_time(sobolev_decomp, landweber, inner_zf, 1.0, 500.0)
    smoothed = smoothed_balancing_time(sobolev_decomp, landweber, inner_zf, 1.0, 57.0)
    assert balancing.time == float(int(balancing.time))
    assert smoothed.time == float(int(smoothed.time))

def test_tau_sdp_with_zero_kernel(tikhonov, continuous):
    decomp = SpectralDecomposition(np.zeros(3), np.eye(3))
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=20.0, mode=continuous)
    outcome = tau_sdp(decomp, tikhonov, coords(2.0, -1.0, 0.5), config)
    assert outcome.time == 0.0
    assert not outcome.hit_emergency

def test_tau_sdp_without_observations(sobolev_decomp, landweber):
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=29.0, mode=IntegerGridMode(max_iter=500))
    outcome = tau_sdp(sobolev_decomp, landweber, EmpiricalCoords(np.zeros(50)), config)
    assert outcome.time == 0.0
    assert not outcome.hit_emergency

# Test the smoothed rule on an inner-case instance against a scan of every iteration up to T
def test_tau_sdp_matches_iteration_scan(sobolev_decomp, inner_zf, landweber, rng):
    T = float(math.ceil(4.0 * math.sqrt(50)))
    zY = EmpiricalCoords(inner_zf.coeffs + spectral.coords(sobolev_decomp, rng.standard_normal(50)).coeffs)
    config = StoppingConfig(sigma_sq=1.0, emergency_stop=T, mode=IntegerGridMode(max_iter=500))
    outcome = tau_sdp(sobolev_decomp, landweber, zY, config)
    threshold = sdp_threshold(sobolev_decomp, 1.0, T)
    below = [t for t in range(int(T) + 1) if spectral.smoothed_risk(sobolev_decomp, landweber, float(t), T, zY) <= threshold]
    assert outcome.time == (float(below[0]) if below else T)
    assert outcome.hit_emergency == (not below)

def test_tau_sdp_continuous_within_one_scan_step(sobolev_decomp, inner_zf, tikhonov, rng, continuous):
    T = 29.0
    zY = EmpiricalCoords(inner_zf.coeffs + spectral.coords(sobolev_decomp, rng.standard_normal(50)).coeffs)
    outcome = tau_sdp(sobolev_decomp, tikhonov, zY, StoppingConfig(sigma_sq=1.0, emergency_stop=T, mode=continuous))
    threshold = sdp_threshold(sobolev_decomp, 1.0, T)
    grid = np.linspace(0.0, T, 2901)
    gap = np.array([spectral.smoothed_risk(sobolev_decomp, tikhonov, t, T, zY) for t in grid]) - threshold
    hits = np.flatnonzero(gap <= 0.0)
    if hits.size == 0:
        assert outcome.hit_emergency
    elif hits[0] == 0:
        assert outcome.time == 0.0
    else:
        assert grid[hits[0] - 1] <= outcome.time <= grid[hits[0]]

def test_smoothed_balancing_time_without_signal(sobolev_decomp, landweber):
    outcome = smoothed_balancing_time(sobolev_decomp, landweber, EmpiricalCoords(np.zeros(50)), 1.0, 29.0)
    assert outcome.time == 0.0
    assert not outcome.hit_emergency

def test_smoothed_balancing_time_with_zero_kernel(tikhonov):
    decomp = SpectralDecomposition(np.zeros(2), np.eye(2))
    outcome = smoothed_balancing_time(decomp, tikhonov, coords(1.0, 2.0), 1.0, 10.0)
    assert outcome.time == 0.0
    assert not outcome.hit_emergency
