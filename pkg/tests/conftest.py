import numpy as np
import pytest
from scipy.signal import lfilter

from reskmd import RawSeries


def ar1_samples(lam, sigma, n, seed, burn=5000):
    """Stationary AR(1) draw x_{t+1} = lam x_t + eps, eps ~ N(0, sigma^2)."""
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n + burn) * sigma
    x = lfilter([1.0], [1.0, -lam], eps)
    return x[burn:]


@pytest.fixture
def ar1():
    return ar1_samples


def ar1_series(lam, sigma, n, seed):
    x = ar1_samples(lam, sigma, n, seed)
    return RawSeries(np.arange(n, dtype=float), x)


@pytest.fixture
def make_ar1_series():
    return ar1_series


def geometric_series(lam=0.9, n=60, x0=1.7):
    """Noise-free scalar linear map trajectory."""
    return RawSeries(np.arange(n, dtype=float), x0 * lam ** np.arange(n))


@pytest.fixture
def linear_map_series():
    return geometric_series
