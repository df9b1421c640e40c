import numpy as np

from app.exceptions import InvalidInputError

SEED_BITS = 64


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """
    Noise stream of one replication.

    Philox is keyed by the master seed and its 256-bit counter starts at
    (0, 0, 0, index): replications read disjoint blocks of one keyed stream, so a
    replication's noise depends only on (seed, index), whatever the worker layout.
    """
    if not 0 <= seed < 2 ** SEED_BITS:
        raise InvalidInputError(f"seed must be a {SEED_BITS}-bit unsigned integer, got {seed}")
    if index < 0:
        raise InvalidInputError(f"replication index must be non-negative, got {index}")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def draw_noise(n: int, sigma_sq: float, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. N(0, sigma^2) draws."""
    if sigma_sq < 0:
        raise InvalidInputError(f"sigma_sq must be non-negative, got {sigma_sq}")
    return np.sqrt(sigma_sq) * rng.standard_normal(n)
