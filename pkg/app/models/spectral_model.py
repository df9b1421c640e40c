from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from app.exceptions import InvalidInputError, OutputError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpectralDecomposition:
    """
    Eigen-decomposition of K_n, the single source of truth for all filter computations.

    Attributes:
        eigenvalues (np.ndarray): lambda_1 >= ... >= lambda_n >= 0, negative jitter clamped to 0.
        basis (np.ndarray): Columns u_j are Euclidean-orthonormal eigenvectors. The empirical
            orthonormal basis with respect to <., .>_n is sqrt(n) * u_j.
    """
    eigenvalues: np.ndarray
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        object.__setattr__(self, "basis", _frozen(self.basis))
        n = self.eigenvalues.size
        if self.basis.shape != (n, n):
            raise InvalidInputError(f"Basis shape {self.basis.shape} does not match {n} eigenvalues")

    @property
    def n(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0.0))

    def reconstruct(self) -> np.ndarray:
        """sum_j lambda_j u_j u_j^T."""
        return (self.basis * self.eigenvalues) @ self.basis.T

    def smoothing_weights(self, T: float) -> np.ndarray:
        """lambda_j T / (lambda_j T + 1): the Tikhonov smoother applied through K_n^(1/2)."""
        if np.isinf(T):
            return (self.eigenvalues > 0.0).astype(float)
        return self.eigenvalues * T / (self.eigenvalues * T + 1.0)


@dataclass(frozen=True)
class EmpiricalCoords:
    """Coordinates <v_j, a>_n = u_j^T a / sqrt(n) of a vector in the empirical eigenbasis."""
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))

    @property
    def n(self) -> int:
        return int(self.coeffs.size)

    @property
    def squared_norm(self) -> float:
        """||a||_n^2 by Parseval."""
        return float(np.dot(self.coeffs, self.coeffs))

    def smoothed(self, weights: np.ndarray) -> "EmpiricalCoords":
        """Coordinates of the smoothed vector, coeffs_j * sqrt(weights_j)."""
        return EmpiricalCoords(self.coeffs * np.sqrt(weights))


@dataclass(frozen=True)
class RiskCurve:
    """A spectral functional tabulated on an increasing grid of times."""
    grid: np.ndarray
    values: np.ndarray
    name: str = "value"

    def __post_init__(self):
        grid = _frozen(self.grid)
        values = _frozen(self.values)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise InvalidInputError("Grid and values must be vectors of equal length")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise InvalidInputError("Grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError(f"Curve '{self.name}' has non-finite values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.grid, self.name: self.values})

    def to_csv(self, path: Path) -> None:
        try:
            self.to_frame().to_csv(path, index=False, float_format="%.17g")
        except OSError as e:
            raise OutputError(f"Cannot write curve to {path}: {e}") from e
