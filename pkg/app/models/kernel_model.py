from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from app.exceptions import InvalidInputError


class KernelVariant(Enum):
    """Kernels available on [0, 1], selected by name on the command line."""
    SOBOLEV = "sobolev"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class Kernel:
    """
    A positive-definite kernel on [0, 1].

    Attributes:
        variant (KernelVariant): min(x, y) for Sobolev, exp(-(x - y)^2 / w^2) for Gaussian.
        bandwidth (float): Gaussian bandwidth w; ignored by the Sobolev kernel.
    """
    variant: KernelVariant
    bandwidth: float | None = None

    def __post_init__(self):
        if self.variant is KernelVariant.GAUSSIAN:
            if self.bandwidth is None or not self.bandwidth > 0:
                raise InvalidInputError(f"Gaussian kernel needs a positive bandwidth, got {self.bandwidth}")

    @classmethod
    def sobolev(cls) -> "Kernel":
        return cls(KernelVariant.SOBOLEV)

    @classmethod
    def gaussian(cls, bandwidth: float = 0.02) -> "Kernel":
        return cls(KernelVariant.GAUSSIAN, bandwidth)

    @classmethod
    def from_name(cls, name: str, bandwidth: float | None = None) -> "Kernel":
        try:
            variant = KernelVariant(name.lower())
        except ValueError as e:
            raise InvalidInputError(f"Unknown kernel '{name}'") from e
        if variant is KernelVariant.GAUSSIAN:
            return cls.gaussian(0.02 if bandwidth is None else bandwidth)
        return cls.sobolev()

    @property
    def sup_diagonal(self) -> float:
        """sup_x k(x, x) over [0, 1]."""
        return 1.0


@dataclass(frozen=True)
class Design:
    """Ordered design points x_1, ..., x_n in [0, 1]."""
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 1 or points.size == 0:
            raise InvalidInputError("A design needs at least one point")
        if np.any(points < 0.0) or np.any(points > 1.0) or not np.all(np.isfinite(points)):
            raise InvalidInputError("Design points must lie in [0, 1]")
        points = points.copy()
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return int(self.points.size)


@dataclass(frozen=True)
class KernelMatrix:
    """The normalized kernel matrix (K_n)_ij = k(x_i, x_j) / n."""
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] == 0:
            raise InvalidInputError(f"Kernel matrix must be square and non-empty, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))
