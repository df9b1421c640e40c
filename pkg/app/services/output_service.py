import io
import logging
import sys
from pathlib import Path
from typing import Literal, Optional, Union

import pandas as pd

from app.exceptions import OutputError
from app.schemas.check_schemas import CheckReport
from app.schemas.experiment_schemas import DeviationEstimate, ExperimentResult, SweepResult

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["rule", "n", "N", "mean_loss", "sd_loss", "mean_tau", "sd_tau", "emergency_rate"]
DEVIATION_COLUMNS = ["event", "rule", "target", "frequency", "wilson_lower", "wilson_upper"]
CHECK_COLUMNS = ["name", "passed", "violations", "cases", "detail"]
FLOAT_FORMAT = "%.17g"

Result = Union[ExperimentResult, SweepResult, DeviationEstimate, CheckReport]


def summary_frame(result: Union[ExperimentResult, SweepResult]) -> pd.DataFrame:
    """One row per (experiment, rule) with the summary columns."""
    results = result.results if isinstance(result, SweepResult) else [result]
    rows = [
        {
            "rule": s.rule.value,
            "n": s.n,
            "N": s.replications,
            "mean_loss": s.mean_loss,
            "sd_loss": s.sd_loss,
            "mean_tau": s.mean_tau,
            "sd_tau": s.sd_tau,
            "emergency_rate": s.emergency_rate,
        }
        for r in results
        for s in r.rules
    ]
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def deviation_frame(estimate: DeviationEstimate) -> pd.DataFrame:
    rows = [{**row.model_dump(), "rule": row.rule.value} for row in estimate.rows]
    return pd.DataFrame(rows, columns=DEVIATION_COLUMNS)


def render(result: Result, format: Literal["csv", "json"] = "csv") -> str:
    """Text of a result: CSV with 17 significant digits, or the full JSON document."""
    if format == "json":
        return result.model_dump_json(indent=2) + "\n"
    if isinstance(result, DeviationEstimate):
        frame = deviation_frame(result)
    elif isinstance(result, CheckReport):
        frame = pd.DataFrame([check.model_dump() for check in result.checks], columns=CHECK_COLUMNS)
    else:
        frame = summary_frame(result)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_output(result: Result, path: Optional[Path], format: Literal["csv", "json"] = "csv") -> None:
    """
    Write a result to `path`, or to stdout when no path is given.

    Raises:
        OutputError: If the file cannot be written.
    """
    text = render(result, format)
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        logger.error("Failed to write %s: %s", path, e)
        raise OutputError(f"Cannot write results to {path}: {e}") from e
    logger.info("Wrote %s results to %s", format.upper(), path)


def read_summary(path: Path) -> pd.DataFrame:
    """Read back a summary CSV; floats written with 17 digits come back as the same doubles."""
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise OutputError(f"Cannot read results from {path}: {e}") from e
