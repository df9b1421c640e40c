from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field


class CheckResult(BaseModel):
    name: str = Field(..., examples=["regularizer_axioms"])
    passed: bool
    violations: int = Field(default=0, ge=0)
    cases: int = Field(default=0, ge=0, description="Number of individual assertions evaluated")
    detail: str = ""


class CheckReport(BaseModel):
    """Outcome of the property suite; diagnostics are reported, not asserted."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    seed: int
    checks: List[CheckResult]
    diagnostics: Dict[str, List[float]] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]
