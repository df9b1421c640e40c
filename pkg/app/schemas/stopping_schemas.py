import math
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class IntegerGridMode(BaseModel):
    """Search the integer iterations 0, 1, ..., min(T, max_iter)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["integer_grid"] = "integer_grid"
    max_iter: int = Field(default=500, ge=1, description="Largest iteration searched", examples=[500])


class ContinuousMode(BaseModel):
    """Bisect on real times [0, T] to a relative tolerance."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["continuous"] = "continuous"
    tolerance: float = Field(default=1e-9, gt=0, description="Relative bisection tolerance in t", examples=[1e-9])


StoppingMode = Annotated[Union[IntegerGridMode, ContinuousMode], Field(discriminator="kind")]


class StoppingConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", ser_json_inf_nan="constants")

    sigma_sq: float = Field(..., ge=0, description="Known noise variance sigma^2", examples=[1.0])
    emergency_stop: float = Field(default=math.inf, gt=0, description="Emergency stop T (may be infinite)", examples=[500])
    mode: StoppingMode = Field(default_factory=IntegerGridMode)
    smoothing_T: float | None = Field(default=None, gt=0, description="Smoothing horizon of the SDP rule; defaults to the emergency stop")

    @model_validator(mode="before")
    @classmethod
    def default_smoothing_horizon(cls, values):
        if isinstance(values, dict) and values.get("smoothing_T") is None:
            values = {**values, "smoothing_T": values.get("emergency_stop", math.inf)}
        return values

    @property
    def cap(self) -> float:
        """Largest admissible stopping time under the configured mode."""
        if isinstance(self.mode, IntegerGridMode):
            if math.isinf(self.emergency_stop):
                return float(self.mode.max_iter)
            return float(min(math.floor(self.emergency_stop), self.mode.max_iter))
        return self.emergency_stop
