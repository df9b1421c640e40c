from pathlib import Path
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Reproducibility
    seed: int = Field(default=0, ge=0, description="Master seed used when --seed is not given")

    # Numerical tolerances
    bisection_tolerance: float = Field(default=1e-9, gt=0, description="Relative tolerance in t for bisection searches")
    max_iter: int = Field(default=500, ge=1, description="Default integer-grid cap (T_max)")
    scan_points: int = Field(default=10_000, ge=10, description="Points of the log-spaced scan used by grid-scan checks")

    # Experiment engine
    jobs: int = Field(default=1, ge=1, description="Worker processes used for replications")
    histogram_bins: int = Field(default=20, ge=1, description="Equal-width bins of the stopping-time histograms")

    # Property suite run by the `check` command
    check_instances: int = Field(default=20, ge=1, description="Random instances per property check")
    check_pairs: int = Field(default=10_000, ge=1, description="Random (lambda, t) pairs for the regularizer axioms")

    # Output and logging
    output_dir: Path = Field(default=Path("results"), description="Default folder for CSV/JSON results")
    log_config: Path = Field(
        default=Path(__file__).resolve().parent.parent / "logging.conf",
        description="Path of the logging fileConfig document",
    )
    debug: bool = Field(default=False, description="Debug mode lowers the root log level to DEBUG")

    model_config = SettingsConfigDict(env_prefix="EARLYSTOP_", env_file=".env", env_file_encoding="utf-8")
