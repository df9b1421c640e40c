"""
Command-line front end.

    earlystop simulate --preset inner-sobolev --n 200 --reps 50 --seed 7
    earlystop sweep --preset inner-gaussian --sizes 100,200
    earlystop deviation --preset inner-sobolev --n 100 --reps 2000 --ys 0.01,0.02,0.05
    earlystop check
    earlystop curves --preset outer-sobolev --n 200 --out results/curves

Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure, 3 I/O failure,
4 when `check` finds a violated property.
"""
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np
from pydantic import ValidationError

from app.dependencies import get_settings
from app.exceptions import InvalidInputError, NumericalError, OutputError, ReplicationError
from app.models.stopping_model import StoppingRule
from app.schemas.cli_schemas import CliConfig
from app.schemas.experiment_schemas import SweepResult
from app.services import spectral_service as spectral
from app.services.check_service import run_checks
from app.services.deviation_service import estimate_deviation
from app.services.output_service import write_output
from app.services.simulation_service import prepare, run_experiment
from app.utils.common import setup_logging
from app.utils.presets import PRESETS, expand_preset, inner_sdp_stop
from app.utils.random_streams import draw_noise, replication_rng

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3
EXIT_CHECK_FAILED = 4

COMMANDS = ("simulate", "sweep", "deviation", "check", "curves")


def exit_code(error: BaseException) -> Optional[int]:
    """Exit status for a failure, or None when the error is not one we map."""
    if isinstance(error, ReplicationError) and error.__cause__ is not None:
        return exit_code(error.__cause__) or EXIT_NUMERICAL
    if isinstance(error, (click.UsageError, ValidationError, InvalidInputError)):
        return EXIT_USAGE
    if isinstance(error, (NumericalError, ReplicationError)):
        return EXIT_NUMERICAL
    if isinstance(error, (OutputError, OSError)):
        return EXIT_IO
    return None


def read_config_file(path: Path) -> dict:
    """Flat key/value JSON document; hyphenated keys are accepted."""
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise InvalidInputError(f"Config file {path} must hold a JSON object")
    for key, value in document.items():
        if isinstance(value, dict):
            raise InvalidInputError(f"Config file {path} must be flat; key '{key}' holds an object")
    return {key.replace("-", "_"): value for key, value in document.items()}


def build_config(params: dict) -> CliConfig:
    """Merge the optional config file under the given flags; EARLYSTOP_SEED backs up --seed."""
    params = {key: value for key, value in params.items() if value is not None}
    config_path = params.pop("config", None)
    merged = read_config_file(config_path) if config_path else {}
    merged.update(params)
    merged.setdefault("seed", get_settings().seed)
    return CliConfig(**merged)


def _run_simulate(config: CliConfig) -> int:
    experiment = expand_preset(config.preset, config.n, **config.preset_overrides())
    write_output(run_experiment(experiment, jobs=config.jobs), config.out, config.format)
    return EXIT_OK


def _run_sweep(config: CliConfig) -> int:
    results = []
    for n in config.sweep_sizes:
        experiment = expand_preset(config.preset, n, **config.preset_overrides())
        results.append(run_experiment(experiment, jobs=config.jobs))
    write_output(SweepResult(results=results), config.out, config.format)
    return EXIT_OK


def _run_deviation(config: CliConfig) -> int:
    experiment = expand_preset(config.preset, config.n, **config.preset_overrides())
    estimate = estimate_deviation(experiment, ts=config.ts or (), ys=config.ys or (), jobs=config.jobs)
    write_output(estimate, config.out, config.format)
    return EXIT_OK


def _run_check(config: CliConfig) -> int:
    report = run_checks(config.seed)
    write_output(report, config.out, config.format)
    if not report.passed:
        logger.error("Failed checks: %s", ", ".join(report.failed()))
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _run_curves(config: CliConfig) -> int:
    """Write every tabulated functional of one noisy instance, one CSV per functional."""
    experiment = expand_preset(config.preset, config.n, **config.preset_overrides())
    setup = prepare(experiment)
    noise = draw_noise(experiment.n, experiment.sigma_sq, replication_rng(experiment.seed, 0))
    zY = spectral.coords(setup.decomp, setup.f + noise)
    sdp = experiment.rule_config(StoppingRule.SDP)
    T = sdp.stopping.smoothing_T if sdp else float(inner_sdp_stop(experiment.n))
    grid = np.arange(0, experiment.t_max + 1, dtype=float)
    folder = Path(config.out or get_settings().output_dir)
    try:
        folder.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Cannot create {folder}: {e}") from e
    for functional in spectral.CURVE_FUNCTIONALS:
        curve = spectral.risk_curve(
            setup.decomp, setup.reg, grid, functional,
            zY=zY, zf=setup.zf, sigma_sq=experiment.sigma_sq, T=T,
        )
        curve.to_csv(folder / f"{functional}.csv")
    logger.info("Wrote %d curves to %s", len(spectral.CURVE_FUNCTIONALS), folder)
    return EXIT_OK


HANDLERS = {
    "simulate": _run_simulate,
    "sweep": _run_sweep,
    "deviation": _run_deviation,
    "check": _run_check,
    "curves": _run_curves,
}


def run_command(config: CliConfig) -> int:
    """Execute a parsed command and return its exit status; failures propagate as exceptions."""
    logger.info("Running %s (preset %s, seed %s)", config.command, config.preset, config.seed)
    return HANDLERS[config.command](config)


class ExitCodeCommand(click.Command):
    """click command that reports failures through the documented exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            code = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            code = EXIT_USAGE
        except click.Abort:
            click.echo("Aborted!", err=True)
            code = EXIT_USAGE
        if not standalone_mode:
            return code
        sys.exit(code or EXIT_OK)


@click.command(cls=ExitCodeCommand, context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("command", type=click.Choice(COMMANDS))
@click.option("--preset", type=click.Choice(PRESETS), help="Experiment preset.")
@click.option("--n", "n", type=int, help="Sample size.")
@click.option("--sizes", help="Comma-separated sample sizes for sweep.")
@click.option("--reps", type=int, help="Monte Carlo replications.")
@click.option("--seed", type=int, help="Master seed (falls back to EARLYSTOP_SEED).")
@click.option("--eta", type=float, help="Landweber step size.")
@click.option("--sigma-sq", "sigma_sq", type=float, help="Noise variance.")
@click.option("--t-max", "t_max", type=int, help="Integer-grid horizon.")
@click.option("--rules", help="Comma-separated stopping rules.")
@click.option("--ys", help="Comma-separated offsets for deviation.")
@click.option("--ts", help="Comma-separated time targets for deviation.")
@click.option("--out", type=click.Path(path_type=Path), help="Output file (folder for curves).")
@click.option("--format", "format", type=click.Choice(["csv", "json"]), help="Output format.")
@click.option("--jobs", type=int, help="Worker processes for replications.")
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Flat JSON file of option values; flags take precedence.")
@click.option("--kernel", type=click.Choice(["sobolev", "gaussian"]), help="Kernel override.")
@click.option("--bandwidth", type=float, help="Gaussian kernel bandwidth.")
@click.option("--signal", type=click.Choice(["outer", "inner"]), help="Regression function override.")
@click.option("--regularizer", type=click.Choice(["tikhonov", "landweber", "showalter"]), help="Filter override.")
@click.option("--sdp-emergency", "sdp_emergency", type=click.Choice(["deterministic", "data-driven"]),
              help="Emergency stop of the SDP rule.")
def cli(**params) -> int:
    """Early stopping of spectral filter estimators: simulations and checks."""
    setup_logging()
    try:
        return run_command(build_config(params))
    except Exception as e:
        code = exit_code(e)
        if code is None:
            raise
        logger.error("%s failed: %s", params.get("command"), e)
        click.echo(f"Error: {e}", err=True)
        return code


def parse_config(argv: Sequence[str]) -> CliConfig:
    """
    Parse command-line arguments into a validated CliConfig.

    Raises:
        click.UsageError: Unknown flag or malformed value.
        ValidationError: Unknown config-file key or invalid value.
        InvalidInputError: Unreadable config file.
    """
    with cli.make_context("earlystop", list(argv)) as ctx:
        return build_config(dict(ctx.params))


def main(argv: Optional[Sequence[str]] = None) -> int:
    return cli.main(args=list(argv) if argv is not None else None, prog_name="earlystop", standalone_mode=False)


if __name__ == "__main__":
    sys.exit(main())
