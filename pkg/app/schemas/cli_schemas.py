from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.utils.presets import PRESETS, SWEEP_SIZES


def split_list(value):
    """Accept comma-separated strings as well as JSON lists."""
    if value is None:
        return value
    if isinstance(value, str):
        items = [item.strip() for item in value.split(",")]
        if any(not item for item in items):
            raise ValueError(f"Empty item in list '{value}'")
        return items
    return value


class CliConfig(BaseModel):
    """Command-line options after merging the optional config file under the flags."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Literal["simulate", "sweep", "deviation", "check", "curves"] = Field(..., examples=["simulate"])
    preset: str = Field(default="inner-sobolev", description="Experiment preset", examples=["inner-sobolev"])
    n: Optional[int] = Field(default=None, ge=1, description="Sample size", examples=[200])
    sizes: Optional[List[int]] = Field(default=None, description="Sample sizes of a sweep", examples=[[100, 200]])
    reps: Optional[int] = Field(default=None, ge=1, description="Monte Carlo replications N", examples=[50])
    seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64, description="Master seed", examples=[7])
    eta: Optional[float] = Field(default=None, gt=0, description="Landweber step size", examples=[2.4])
    sigma_sq: Optional[float] = Field(default=None, ge=0, description="Noise variance", examples=[1.0])
    t_max: Optional[int] = Field(default=None, ge=1, description="Integer-grid horizon", examples=[500])
    rules: Optional[List[str]] = Field(default=None, description="Stopping rules to evaluate", examples=[["dp", "sdp"]])
    ys: Optional[List[float]] = Field(default=None, description="Offsets y of the deviation events", examples=[[0.01, 0.02]])
    ts: Optional[List[float]] = Field(default=None, description="Time targets of the deviation events", examples=[[50, 100]])
    out: Optional[Path] = Field(default=None, description="Output file (stdout when omitted)")
    format: Literal["csv", "json"] = Field(default="csv")
    jobs: Optional[int] = Field(default=None, ge=1, description="Worker processes")
    kernel: Optional[Literal["sobolev", "gaussian"]] = None
    bandwidth: Optional[float] = Field(default=None, gt=0)
    signal: Optional[Literal["outer", "inner"]] = None
    regularizer: Optional[Literal["tikhonov", "landweber", "showalter"]] = None
    sdp_emergency: Literal["deterministic", "data-driven"] = "deterministic"

    _split_lists = field_validator("sizes", "rules", "ys", "ts", mode="before")(split_list)

    @field_validator("preset")
    @classmethod
    def known_preset(cls, preset: str) -> str:
        if preset not in PRESETS:
            raise ValueError(f"Unknown preset '{preset}'; choose from {', '.join(PRESETS)}")
        return preset

    @field_validator("sizes")
    @classmethod
    def positive_sizes(cls, sizes: Optional[List[int]]) -> Optional[List[int]]:
        if sizes is not None and (not sizes or any(size < 1 for size in sizes)):
            raise ValueError("Sizes must be a non-empty list of positive integers")
        return sizes

    @model_validator(mode="after")
    def check_command(self):
        if self.preset == "custom" and self.n is None and not (self.command == "sweep" and self.sizes):
            raise ValueError("The custom preset needs --n")
        if self.command == "deviation" and not (self.ys or self.ts):
            raise ValueError("The deviation command needs --ys or --ts")
        return self

    @property
    def sweep_sizes(self) -> List[int]:
        return list(self.sizes) if self.sizes else list(SWEEP_SIZES)

    def preset_overrides(self) -> dict:
        """Keyword overrides understood by `expand_preset`."""
        return {
            "replications": self.reps,
            "seed": self.seed,
            "eta": self.eta,
            "sigma_sq": self.sigma_sq,
            "t_max": self.t_max,
            "rules": self.rules,
            "kernel": self.kernel,
            "bandwidth": self.bandwidth,
            "signal": self.signal,
            "regularizer": self.regularizer,
            "sdp_emergency": self.sdp_emergency,
        }
