import numpy as np
from scipy import stats


def mean_and_sd(values) -> tuple[float, float]:
    """Sample mean and standard deviation (ddof=1; 0 for a single value)."""
    values = np.asarray(values, dtype=float)
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), sd


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    p = successes / trials
    denom = 1.0 + z ** 2 / trials
    center = (p + z ** 2 / (2 * trials)) / denom
    half = z / denom * np.sqrt(p * (1.0 - p) / trials + z ** 2 / (4 * trials ** 2))
    return float(max(0.0, center - half)), float(min(1.0, center + half))


def histogram(values, bins: int, upper: float) -> tuple[list[float], list[int]]:
    """Equal-width histogram on [0, upper]; values above `upper` fall in the last bin."""
    values = np.minimum(np.asarray(values, dtype=float), upper)
    counts, edges = np.histogram(values, bins=bins, range=(0.0, upper if upper > 0 else 1.0))
    return edges.tolist(), counts.astype(int).tolist()
