import numpy as np
import pytest

from app.exceptions import InvalidInputError, NumericalError, ReplicationError
from app.models.kernel_model import Kernel
from app.models.spectral_model import EmpiricalCoords
from app.models.stopping_model import StoppingRule
from app.schemas.experiment_schemas import SignalSpec
from app.services import spectral_service as spectral
from app.services.kernel_service import fixed_design, kernel_matrix
from app.services.simulation_service import (
    generate_sample,
    map_replications,
    prepare,
    realized_loss,
    run_experiment,
    run_replication,
    signal_values,
)
from app.utils.presets import expand_preset
from app.utils.random_streams import replication_rng


def _summary_fields(result):
    return [s.model_dump() for s in result.rules]


def test_signal_values_for_each_variant():
    design = fixed_design(4)
    np.testing.assert_array_equal(signal_values(SignalSpec(variant="outer"), design), [2.0, 1.0, 1.0, 0.0])
    np.testing.assert_allclose(signal_values(SignalSpec(variant="inner"), design)[1], -0.75)
    custom = SignalSpec(variant="custom", values=[1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(signal_values(custom, design), [1.0, 2.0, 3.0, 4.0])

def test_custom_signal_length_must_match_design():
    with pytest.raises(InvalidInputError):
        signal_values(SignalSpec(variant="custom", values=[1.0, 2.0]), fixed_design(3))

def test_generate_sample_without_noise_is_the_signal(rng):
    design = fixed_design(10)
    Y = generate_sample(SignalSpec(variant="inner"), design, 0.0, rng)
    np.testing.assert_array_equal(Y, signal_values(SignalSpec(variant="inner"), design))

def test_generate_sample_is_reproducible():
    design = fixed_design(25)
    first = generate_sample(SignalSpec(variant="outer"), design, 1.0, replication_rng(11, 4))
    second = generate_sample(SignalSpec(variant="outer"), design, 1.0, replication_rng(11, 4))
    np.testing.assert_array_equal(first, second)

# Test the coordinate form of the loss against fitted values in data space
def test_realized_loss_matches_fitted_values(sobolev_decomp, tikhonov, rng):
    f = rng.normal(size=sobolev_decomp.n)
    Y = f + rng.normal(size=sobolev_decomp.n)
    zf, zY = spectral.coords(sobolev_decomp, f), spectral.coords(sobolev_decomp, Y)
    fitted = spectral.estimate(sobolev_decomp, tikhonov, 7.0, Y)
    expected = np.mean(np.square(f - fitted))
    assert realized_loss(sobolev_decomp, tikhonov, 7.0, zf, zY) == pytest.approx(expected, rel=1e-10)

def test_run_replication_returns_one_outcome_per_rule(small_experiment):
    setup = prepare(small_experiment)
    outcomes = run_replication(setup.decomp, setup.reg, setup.zf, small_experiment.rules, 1.0, replication_rng(3, 0))
    assert [o.rule for o in outcomes] == [rc.rule for rc in small_experiment.rules]
    assert all(o.loss >= 0.0 for o in outcomes)
    assert all(o.time == float(int(o.time)) for o in outcomes)

def test_prepare_computes_data_independent_rules_once(small_experiment):
    setup = prepare(small_experiment)
    assert set(setup.fixed) == {StoppingRule.ORACLE, StoppingRule.BALANCING}
    assert setup.zf.n == small_experiment.n

def test_run_experiment_summaries(small_experiment):
    result = run_experiment(small_experiment, jobs=1)
    assert [s.rule for s in result.rules] == [rc.rule for rc in small_experiment.rules]
    for summary in result.rules:
        assert summary.replications == 5
        assert sum(summary.histogram.counts) == 5
        assert len(summary.histogram.edges) == len(summary.histogram.counts) + 1
        assert 0.0 <= summary.emergency_rate <= 1.0
    assert result.wall_time >= 0.0

# Test a fixed seed reproduces every aggregate exactly
def test_run_experiment_is_deterministic(small_experiment):
    assert _summary_fields(run_experiment(small_experiment, jobs=1)) == _summary_fields(run_experiment(small_experiment, jobs=1))

def test_seed_changes_data_driven_rules(small_experiment):
    other = small_experiment.model_copy(update={"seed": 4})
    first = run_experiment(small_experiment, jobs=1).summary(StoppingRule.DP)
    second = run_experiment(other, jobs=1).summary(StoppingRule.DP)
    assert first.mean_loss != second.mean_loss

def test_data_independent_rules_have_no_spread(small_experiment):
    result = run_experiment(small_experiment, jobs=1)
    assert result.summary(StoppingRule.ORACLE).sd_tau == 0.0
    assert result.summary(StoppingRule.BALANCING).sd_tau == 0.0

def test_single_replication_has_zero_spread():
    config = expand_preset("inner-sobolev", 30, replications=1, seed=9)
    result = run_experiment(config, jobs=1)
    assert all(s.sd_loss == 0.0 and s.sd_tau == 0.0 for s in result.rules)

# Test noiseless data: the discrepancy rules never reach a zero threshold
def test_noiseless_experiment_hits_emergency_stops():
    config = expand_preset("inner-sobolev", 30, replications=3, seed=1, sigma_sq=0.0)
    result = run_experiment(config, jobs=1)
    dp = result.summary(StoppingRule.DP)
    sdp = result.summary(StoppingRule.SDP)
    assert dp.emergency_rate == 1.0 and dp.mean_tau == 500.0
    assert sdp.emergency_rate == 1.0 and sdp.mean_tau == 22.0
    assert dp.sd_loss == 0.0

def test_parallel_run_matches_serial(small_experiment):
    serial = run_experiment(small_experiment, jobs=1)
    parallel = run_experiment(small_experiment, jobs=2)
    assert _summary_fields(serial) == _summary_fields(parallel)

def test_map_replications_preserves_order():
    assert map_replications(lambda i: i * i, 6, jobs=1) == [0, 1, 4, 9, 16, 25]

def test_failed_replication_reports_seed_and_index(small_experiment, mocker):
    mocker.patch("app.services.simulation_service.draw_noise", side_effect=NumericalError("overflow"))
    with pytest.raises(ReplicationError) as excinfo:
        run_experiment(small_experiment, jobs=1)
    assert excinfo.value.seed == 3
    assert excinfo.value.index == 0
    assert isinstance(excinfo.value.__cause__, NumericalError)

def test_gaussian_experiment_runs():
    config = expand_preset("inner-gaussian", 30, replications=2, seed=5)
    assert config.kernel.build() == Kernel.gaussian(0.02)
    result = run_experiment(config, jobs=1)
    assert len(result.rules) == 4

def test_zero_signal_keeps_losses_finite(sobolev_decomp, tikhonov):
    zf = EmpiricalCoords(np.zeros(sobolev_decomp.n))
    assert realized_loss(sobolev_decomp, tikhonov, 3.0, zf, zf) == 0.0

def test_kernel_matrix_for_design_matches_setup(small_experiment):
    setup = prepare(small_experiment)
    K = kernel_matrix(Kernel.sobolev(), setup.design)
    np.testing.assert_allclose(setup.decomp.reconstruct(), K.entries, atol=1e-12)
