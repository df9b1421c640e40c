import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from app.exceptions import InvalidInputError, StabilityError, UnsupportedModeError

# below this value of eta*lambda (resp. t*lambda) the filters use their first-order expansion
SMALL_ARGUMENT = 1e-8


class RegularizerVariant(Enum):
    """Spectral filter families g_t(lambda)."""
    TIKHONOV = "tikhonov"
    LANDWEBER = "landweber"
    SHOWALTER = "showalter"


@dataclass(frozen=True)
class Regularizer:
    """
    A filter family g_t(lambda) together with its structural constants.

    Attributes:
        variant (RegularizerVariant): Tikhonov, Landweber (gradient descent) or Showalter.
        eta (float): Landweber step size; unused by the other variants.
        q (float): Qualification exponent of |r_t(lambda)| <= Q (lambda t)^-q.
        Q (float): Qualification constant.
    """
    variant: RegularizerVariant
    eta: float | None = None
    q: float = 1.0
    Q: float = 1.0

    def __post_init__(self):
        if self.variant is RegularizerVariant.LANDWEBER:
            if self.eta is None or not self.eta > 0 or not math.isfinite(self.eta):
                raise InvalidInputError(f"Landweber needs a positive step size, got {self.eta}")
        if not (self.q > 0 and self.Q > 0):
            raise InvalidInputError("Qualification constants q and Q must be positive")

    @classmethod
    def tikhonov(cls) -> "Regularizer":
        return cls(RegularizerVariant.TIKHONOV)

    @classmethod
    def landweber(cls, eta: float) -> "Regularizer":
        return cls(RegularizerVariant.LANDWEBER, eta=eta)

    @classmethod
    def showalter(cls) -> "Regularizer":
        return cls(RegularizerVariant.SHOWALTER)

    @classmethod
    def from_name(cls, name: str, eta: float | None = None) -> "Regularizer":
        try:
            variant = RegularizerVariant(name.lower())
        except ValueError as e:
            raise InvalidInputError(f"Unknown regularizer '{name}'") from e
        if variant is RegularizerVariant.LANDWEBER:
            return cls.landweber(1.0 if eta is None else eta)
        return cls(variant)

    @property
    def name(self) -> str:
        return self.variant.value

    @property
    def B(self) -> float:
        """Constant of the linear upper bound g_t(lambda) <= B t."""
        return float(self.eta) if self.variant is RegularizerVariant.LANDWEBER else 1.0

    @property
    def b(self) -> float:
        """Constant of the lower bound lambda g_t(lambda) >= b min(1, lambda t)."""
        if self.variant is RegularizerVariant.LANDWEBER:
            return min(0.5, -math.expm1(-self.eta))
        return 0.5

    def check_stability(self, lambda_max: float) -> None:
        """Raise StabilityError when the Landweber iteration diverges on this spectrum."""
        if self.variant is RegularizerVariant.LANDWEBER and self.eta * lambda_max >= 2.0:
            raise StabilityError(
                f"Landweber step size eta={self.eta} is unstable: eta * lambda_1 = {self.eta * lambda_max:.6g} >= 2",
                report={"eta": self.eta, "lambda_1": lambda_max},
            )

    def supports_continuous(self, lambdas: np.ndarray) -> bool:
        """Whether g_t is defined for real t on the whole spectrum."""
        if self.variant is not RegularizerVariant.LANDWEBER:
            return True
        return bool(np.all(1.0 - self.eta * np.asarray(lambdas) >= 0.0))

    def _landweber_base(self, t: float, lam: np.ndarray) -> np.ndarray:
        base = 1.0 - self.eta * lam
        if t != math.floor(t) and np.any(base < 0.0):
            raise UnsupportedModeError(
                f"Landweber with eta={self.eta} has 1 - eta*lambda < 0; only integer t is defined, got t={t}"
            )
        return base

    def lambda_g(self, t: float, lam) -> np.ndarray:
        """lambda * g_t(lambda), evaluated elementwise; the building block of every functional."""
        lam = np.asarray(lam, dtype=float)
        if t == 0.0:
            return np.zeros_like(lam)
        if math.isinf(t):
            return (lam > 0.0).astype(float)
        if self.variant is RegularizerVariant.TIKHONOV:
            return lam * t / (1.0 + lam * t)
        if self.variant is RegularizerVariant.SHOWALTER:
            return -np.expm1(-t * lam)
        if t < 1.0:
            return self.eta * t * lam
        base = self._landweber_base(t, lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            positive = -np.expm1(t * np.log1p(-self.eta * lam))
        return np.where(base >= 0.0, positive, 1.0 - np.power(base, t))

    def residual(self, t: float, lam) -> np.ndarray:
        """r_t(lambda) = 1 - lambda g_t(lambda)."""
        return 1.0 - self.lambda_g(t, lam)

    def g(self, t: float, lam) -> np.ndarray:
        """g_t(lambda) with the lambda -> 0 limits handled without cancellation."""
        lam = np.asarray(lam, dtype=float)
        if t == 0.0:
            return np.zeros_like(lam)
        if math.isinf(t):
            return np.where(lam > 0.0, 1.0 / np.where(lam > 0.0, lam, 1.0), np.inf)
        if self.variant is RegularizerVariant.TIKHONOV:
            return t / (1.0 + lam * t)
        if self.variant is RegularizerVariant.LANDWEBER and t < 1.0:
            return np.full_like(lam, self.eta * t)
        scale = self.eta if self.variant is RegularizerVariant.LANDWEBER else 1.0
        small = scale * lam * (t if self.variant is RegularizerVariant.SHOWALTER else 1.0) < SMALL_ARGUMENT
        safe = np.where(small, 1.0, lam)
        regular = self.lambda_g(t, safe) / safe
        if self.variant is RegularizerVariant.SHOWALTER:
            expansion = t * (1.0 - 0.5 * t * lam)
        else:
            expansion = self.eta * t * (1.0 - 0.5 * (t - 1.0) * self.eta * lam)
        return np.where(small, expansion, regular)

    def check_properties(self, lams: np.ndarray, ts: np.ndarray) -> dict[str, int]:
        """
        Count violations of (BdF), (LFU), (LFL) and (QuErr) over paired samples (lam_i, t_i).

        Returns:
            dict[str, int]: Violation count per axiom.
        """
        counts = {"BdF": 0, "LFU": 0, "LFL": 0, "QuErr": 0}
        rel = 1e-12
        for lam, t in zip(np.asarray(lams, dtype=float), np.asarray(ts, dtype=float)):
            phi = float(self.lambda_g(t, lam))
            g = float(self.g(t, lam))
            if phi < -rel or phi > 1.0 + rel:
                counts["BdF"] += 1
            if g > self.B * t * (1.0 + rel) + rel:
                counts["LFU"] += 1
            if phi < self.b * min(1.0, lam * t) * (1.0 - rel) - rel:
                counts["LFL"] += 1
            if lam * t >= 1.0 and abs(1.0 - phi) > self.Q * (lam * t) ** (-self.q) * (1.0 + rel) + rel:
                counts["QuErr"] += 1
        return counts
