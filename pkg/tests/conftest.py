"""
File: conftest.py

Overview:
Shared pytest fixtures for the early-stopping library. Every random quantity is drawn
from a seeded Philox generator so tests are reproducible, and the kernel matrices used
here are small enough to decompose in milliseconds.

Fixtures:
- `rng`: Seeded numpy Generator.
- `single_eigen`: One-eigenvalue decomposition (lambda = 1, n = 1) with closed-form stopping times.
- `tikhonov`, `showalter`, `landweber`: Regularizer instances.
- `sobolev_decomp`, `inner_zf`: Sobolev decomposition at n = 50 and the inner signal's coordinates.
- `continuous`: Continuous stopping mode with a tight tolerance.
- `small_experiment`: Inner-case Sobolev experiment small enough for unit tests.
- `fast_settings`: Environment overrides shrinking the property suite.
"""

# Third-party imports
import numpy as np
import pytest

# Application-specific imports
from app.models.kernel_model import Kernel
from app.models.regularizer_model import Regularizer
from app.models.spectral_model import SpectralDecomposition
from app.schemas.stopping_schemas import ContinuousMode
from app.services import spectral_service as spectral
from app.services.kernel_service import fixed_design, kernel_matrix
from app.utils.presets import expand_preset
from app.utils.signals import inner_values


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=20240501))


@pytest.fixture
def single_eigen():
    return SpectralDecomposition(np.array([1.0]), np.array([[1.0]]))


@pytest.fixture
def tikhonov():
    return Regularizer.tikhonov()


@pytest.fixture
def showalter():
    return Regularizer.showalter()


@pytest.fixture
def landweber():
    return Regularizer.landweber(2.4)


@pytest.fixture(scope="module")
def sobolev_decomp():
    design = fixed_design(50)
    return spectral.decompose(kernel_matrix(Kernel.sobolev(), design))


@pytest.fixture(scope="module")
def inner_zf(sobolev_decomp):
    return spectral.coords(sobolev_decomp, inner_values(fixed_design(50).points))


@pytest.fixture
def continuous():
    return ContinuousMode(tolerance=1e-10)


@pytest.fixture
def small_experiment():
    return expand_preset("inner-sobolev", 40, replications=5, seed=3)


@pytest.fixture
def fast_settings(monkeypatch):
    monkeypatch.setenv("EARLYSTOP_CHECK_INSTANCES", "3")
    monkeypatch.setenv("EARLYSTOP_CHECK_PAIRS", "500")
    monkeypatch.setenv("EARLYSTOP_SCAN_POINTS", "2000")
