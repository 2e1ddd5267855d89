"""Input validation helpers used by the estimators and value types."""

import numpy as np

from .errors import NonUniformSamplingError

#: weights must sum to one within this absolute tolerance
WEIGHT_TOL = 1e-12


def check_finite(arr, name):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


def as_matrix(a, name, dtype=None):
    """Coerce to a finite 2-D ndarray, promoting 1-D input to a column."""
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got ndim={arr.ndim}")
    check_finite(arr, name)
    return arr


def as_vector(a, name, dtype=float):
    arr = np.asarray(a, dtype=dtype).ravel()
    check_finite(arr, name)
    return arr


def frozen_array(a, dtype=float, ndim=None):
    """Return a read-only ndarray copy (no copy if already read-only)."""
    arr = np.asarray(a, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-D array, got ndim={arr.ndim}")
    if arr.flags.writeable:
        arr = arr.copy()
        arr.flags.writeable = False
    return arr


def check_weights(weights, n_rows):
    """Validate quadrature weights: right length, nonnegative, sum to one."""
    w = as_vector(weights, "weights")
    if w.shape[0] != n_rows:
        raise ValueError(f"weights length {w.shape[0]} != {n_rows} rows")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
    return w


def check_uniform_times(times, rtol=1e-9):
    """Require a uniform sampling grid within a relative tolerance."""
    steps = np.diff(times)
    h = steps.mean()
    if h <= 0 or np.any(np.abs(steps - h) > rtol * abs(h)):
        raise NonUniformSamplingError(
            "timestamps are not uniformly spaced; resample "
            "(e.g. spline_interpolate) before delay embedding"
        )
    return h
