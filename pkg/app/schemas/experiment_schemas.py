from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.kernel_model import Kernel
from app.models.regularizer_model import Regularizer
from app.models.stopping_model import StoppingRule
from app.schemas.stopping_schemas import IntegerGridMode, StoppingConfig


class KernelSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Literal["sobolev", "gaussian"] = Field(default="sobolev", examples=["sobolev"])
    bandwidth: Optional[float] = Field(default=None, gt=0, description="Gaussian bandwidth w", examples=[0.02])

    def build(self) -> Kernel:
        return Kernel.from_name(self.name, self.bandwidth)


class RegularizerSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Literal["tikhonov", "landweber", "showalter"] = Field(default="landweber", examples=["landweber"])
    eta: Optional[float] = Field(default=None, gt=0, description="Landweber step size", examples=[2.4])

    def build(self) -> Regularizer:
        return Regularizer.from_name(self.name, self.eta)


class SignalSpec(BaseModel):
    """Regression function: one of the two built-in signals, or values tabulated on the design."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    variant: Literal["outer", "inner", "custom"] = Field(..., examples=["inner"])
    values: Optional[List[float]] = Field(default=None, description="Signal values at x_1..x_n (custom only)")

    @model_validator(mode="after")
    def check_values(self):
        if self.variant == "custom" and not self.values:
            raise ValueError("A custom signal needs tabulated values")
        if self.variant != "custom" and self.values is not None:
            raise ValueError("Tabulated values are only accepted for a custom signal")
        return self


class RuleConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rule: StoppingRule
    stopping: StoppingConfig


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", ser_json_inf_nan="constants")

    n: int = Field(..., ge=1, description="Sample size", examples=[200])
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    regularizer: RegularizerSpec = Field(default_factory=RegularizerSpec)
    signal: SignalSpec
    sigma_sq: float = Field(default=1.0, ge=0, description="Noise variance", examples=[1.0])
    replications: int = Field(default=50, ge=1, description="Number N of Monte Carlo replications", examples=[50])
    rules: List[RuleConfig] = Field(default_factory=list)
    t_max: int = Field(default=500, ge=1, description="Largest iteration of the integer grid", examples=[500])
    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="Master seed")
    preset: Optional[str] = Field(default=None, description="Preset the configuration was expanded from")

    @field_validator("rules")
    @classmethod
    def unique_rules(cls, rules: List[RuleConfig]) -> List[RuleConfig]:
        names = [r.rule for r in rules]
        if len(names) != len(set(names)):
            raise ValueError("Each stopping rule may appear only once")
        return rules

    @model_validator(mode="after")
    def check_consistency(self):
        for rule in self.rules:
            if isinstance(rule.stopping.mode, IntegerGridMode) and rule.stopping.emergency_stop > self.t_max:
                raise ValueError(f"Emergency stop of rule {rule.rule.value} exceeds t_max={self.t_max}")
            if rule.stopping.sigma_sq != self.sigma_sq:
                raise ValueError(f"Rule {rule.rule.value} uses sigma_sq={rule.stopping.sigma_sq}, experiment uses {self.sigma_sq}")
        if self.signal.variant == "custom" and len(self.signal.values) != self.n:
            raise ValueError(f"Custom signal has {len(self.signal.values)} values, expected n={self.n}")
        return self

    def rule_config(self, rule: StoppingRule) -> Optional[RuleConfig]:
        return next((r for r in self.rules if r.rule is rule), None)


class Histogram(BaseModel):
    edges: List[float]
    counts: List[int]


class RuleSummary(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    rule: StoppingRule
    n: int
    replications: int
    mean_loss: float = Field(..., ge=0)
    sd_loss: float
    mean_tau: float
    sd_tau: float
    emergency_rate: float = Field(..., ge=0, le=1)
    histogram: Histogram

    @property
    def loss_standard_error(self) -> float:
        return self.sd_loss / self.replications ** 0.5


class ExperimentResult(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    config: ExperimentConfig
    rules: List[RuleSummary]
    wall_time: float = Field(..., ge=0, description="Seconds spent in run_experiment")

    def summary(self, rule: StoppingRule) -> RuleSummary:
        return next(s for s in self.rules if s.rule is rule)


class DeviationRow(BaseModel):
    event: Literal["tau_exceeds", "variance_exceeds", "bias_exceeds"]
    rule: StoppingRule
    target: float
    frequency: float = Field(..., ge=0, le=1)
    wilson_lower: float
    wilson_upper: float


class DeviationEstimate(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    config: ExperimentConfig
    balancing_time: float = Field(..., description="t_n*, reference of the DP events")
    smoothed_balancing_time: Optional[float] = Field(default=None, description="Reference of the SDP events")
    rows: List[DeviationRow]

    def frequencies(self, event: str, rule: StoppingRule) -> List[float]:
        return [row.frequency for row in self.rows if row.event == event and row.rule is rule]


class SweepResult(BaseModel):
    """Experiments of one preset across several sample sizes."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    results: List[ExperimentResult]
