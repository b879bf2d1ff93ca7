import numpy as np
import pytest

from causa.core import TimeSeriesDataset


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_noise_dataset(seed: int, t: int = 500, n: int = 2) -> TimeSeriesDataset:
    r = np.random.default_rng(seed)
    names = tuple("XYZW"[:n]) if n <= 4 else tuple(f"x{i}" for i in range(n))
    return TimeSeriesDataset(names, r.normal(size=(t, n)))


def make_pair_dataset(seed: int, coeff: float = 0.8, lag: int = 1, t: int = 1500):
    """Y_t = coeff * X_{t-lag} + eta, X white noise; centered columns."""
    r = np.random.default_rng(seed)
    x = r.normal(size=t)
    eta = r.normal(size=t)
    y = np.empty(t)
    y[:lag] = r.normal(size=lag)
    for i in range(lag, t):
        y[i] = coeff * x[i - lag] + eta[i]
    vals = np.column_stack([x, y])
    vals = vals - vals.mean(axis=0)
    return TimeSeriesDataset(("X", "Y"), vals)


def make_chain_dataset(seed: int, t: int = 2000):
    """X -> Z -> Y, each step lag 1 with coefficient 0.8, unit noise."""
    r = np.random.default_rng(seed)
    x = r.normal(size=t)
    z = np.zeros(t)
    y = np.zeros(t)
    ez = r.normal(size=t)
    ey = r.normal(size=t)
    for i in range(1, t):
        z[i] = 0.8 * x[i - 1] + ez[i]
        y[i] = 0.8 * z[i - 1] + ey[i]
    vals = np.column_stack([x, y, z])
    vals = vals - vals.mean(axis=0)
    return TimeSeriesDataset(("X", "Y", "Z"), vals)
