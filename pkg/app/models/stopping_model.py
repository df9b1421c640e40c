from dataclasses import dataclass
from enum import Enum


class StoppingRule(Enum):
    """Stopping rules, named as on the command line."""
    DP = "dp"
    SDP = "sdp"
    BALANCING = "balancing"
    SMOOTHED_BALANCING = "smoothed-balancing"
    ORACLE = "oracle"

    @property
    def data_driven(self) -> bool:
        """Whether the rule looks at the observations (and must be recomputed per replication)."""
        return self in (StoppingRule.DP, StoppingRule.SDP)


@dataclass(frozen=True)
class StoppingOutcome:
    """
    Result of a stopping rule.

    Attributes:
        time (float): Stopping time, never above the emergency stop.
        rule (StoppingRule): Rule that produced the time.
        hit_emergency (bool): True when the defining inequality never held before the emergency stop.
        threshold_at_stop (float): Right-hand side of the defining inequality at the returned time.
    """
    time: float
    rule: StoppingRule
    hit_emergency: bool
    threshold_at_stop: float
