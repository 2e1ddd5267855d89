"""Eigenpair residuals and their aggregate early-warning value.

For a candidate eigenpair (lambda, xi) over a dictionary pair the squared
residual is the weighted quadratic form

    xi* [G_yy - lambda G_xy* - conj(lambda) G_xy + |lambda|^2 G_xx] xi
    ----------------------------------------------------------------
                           xi* G_xx xi

with G_xx = Psi_X* W Psi_X, G_xy = Psi_X* W Psi_Y, G_yy = Psi_Y* W Psi_Y.
The per-window signal is the mean of this quantity over all fitted
eigenpairs. The form is a variance-like nonnegative quantity; tiny
negative round-off (> -1e-10) is clamped to zero, anything more negative
signals broken inputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, check_weights
from .errors import (
    ConfigurationError,
    DegenerateEigenfunctionError,
    NumericalInconsistencyError,
)

__all__ = [
    "ResidualReport",
    "eigpair_residual",
    "reskmd",
    "residual_report",
    "monte_carlo_bias_variance_check",
    "BiasVarianceCheck",
    "truncation_bounds",
]

#: results below this are numerical inconsistency, above (but < 0) round-off
CLAMP_TOL = -1e-10


def _galerkin(psi_x, psi_y, weights):
    wx = weights[:, None] * psi_x
    wy = weights[:, None] * psi_y
    return psi_x.conj().T @ wx, psi_x.conj().T @ wy, psi_y.conj().T @ wy


def _residual_from_gram(g_xx, g_xy, g_yy, eigenvalue, xi):
    lam = complex(eigenvalue)
    numerator_matrix = (
        g_yy
        - lam * g_xy.conj().T
        - np.conj(lam) * g_xy
        + (abs(lam) ** 2) * g_xx
    )
    denom = np.vdot(xi, g_xx @ xi).real
    if denom <= 0:
        raise DegenerateEigenfunctionError(
            "candidate eigenfunction has zero norm under the data measure"
        )
    value = np.vdot(xi, numerator_matrix @ xi).real / denom
    if value < CLAMP_TOL:
        raise NumericalInconsistencyError(
            f"squared residual {value!r} below the round-off clamp; "
            "dictionary matrices and weights are inconsistent"
        )
    return max(value, 0.0)


def eigpair_residual(psi_x, psi_y, weights, eigenvalue, eigenvector):
    """Squared residual of one candidate eigenpair over a dictionary pair.

    Scale-invariant in the eigenvector and nonnegative for any consistent
    (psi_x, psi_y, weights) triple.
    """
    psi_x = as_matrix(psi_x, "psi_x", dtype=complex)
    psi_y = as_matrix(psi_y, "psi_y", dtype=complex)
    w = check_weights(weights, psi_x.shape[0])
    xi = np.asarray(eigenvector, dtype=complex).ravel()
    g_xx, g_xy, g_yy = _galerkin(psi_x, psi_y, w)
    return _residual_from_gram(g_xx, g_xy, g_yy, eigenvalue, xi)


def reskmd(report_pairs, mode_weights=None):
    """Aggregate per-pair squared residuals into the early-warning value.

    Default is the plain arithmetic mean over pairs. ``mode_weights``
    switches to a weighted sum (for sensitivity studies with per-mode
    amplitudes).
    """
    pairs = list(report_pairs)
    if not pairs:
        raise ConfigurationError("need at least one eigenpair residual")
    residuals = np.array([res for _, res in pairs], dtype=float)
    if mode_weights is None:
        return float(residuals.mean())
    w = np.asarray(mode_weights, dtype=float)
    if w.shape != residuals.shape:
        raise ValueError("mode_weights must match the number of pairs")
    return float(np.sum(w * residuals))


@dataclass(frozen=True)
class ResidualReport:
    """Per-eigenpair squared residuals plus their aggregate for one window."""

    eigenvalues: np.ndarray
    residuals_sq: np.ndarray
    reskmd_sq: float
    rank_used: int
    window_time: float = math.nan

    def __post_init__(self):
        eigs = np.asarray(self.eigenvalues, dtype=complex)
        res = np.asarray(self.residuals_sq, dtype=float)
        if eigs.shape != res.shape or eigs.ndim != 1:
            raise ValueError("eigenvalues and residuals_sq must be equal-length 1-D")
        if res.size == 0:
            raise ConfigurationError("report needs at least one pair")
        if np.any(res < 0):
            raise ValueError("squared residuals must be nonnegative")
        if abs(self.reskmd_sq - res.mean()) > 1e-12:
            raise ValueError("reskmd_sq must equal the mean of residuals_sq")
        object.__setattr__(self, "eigenvalues", eigs)
        object.__setattr__(self, "residuals_sq", res)

    @property
    def per_pair(self):
        return list(zip(self.eigenvalues.tolist(), self.residuals_sq.tolist()))


def residual_report(model, window_time=math.nan):
    """Evaluate all fitted eigenpairs of a Koopman estimator.

    ``model`` is any fitted object exposing ``psi_x_``, ``psi_y_``,
    ``weights_``, ``eigenvalues_``, ``eigenvectors_`` and ``rank_``. The
    Galerkin matrices are formed once and shared across pairs.
    """
    g_xx, g_xy, g_yy = _galerkin(
        np.asarray(model.psi_x_, dtype=complex),
        np.asarray(model.psi_y_, dtype=complex),
        model.weights_,
    )
    residuals = np.array(
        [
            _residual_from_gram(g_xx, g_xy, g_yy, lam, model.eigenvectors_[:, i])
            for i, lam in enumerate(model.eigenvalues_)
        ]
    )
    return ResidualReport(
        eigenvalues=np.asarray(model.eigenvalues_),
        residuals_sq=residuals,
        reskmd_sq=float(residuals.mean()),
        rank_used=int(model.rank_),
        window_time=window_time,
    )


@dataclass(frozen=True)
class BiasVarianceCheck:
    """Monte Carlo estimates of both sides of the bias-variance identity."""

    lhs: float
    rhs: float
    discrepancy: float  # |lhs - rhs| normalized by lhs
    stderr: float  # standard error of the paired lhs - rhs estimate
    n_samples: int


def monte_carlo_bias_variance_check(g1, g2, sampler, noise, n, rng=None,
                                    inner_draws=8):
    """Check E[||g1 o F + g2||^2] = ||E[g1 o F] + g2||^2 + Var[g1 o F].

    ``sampler(rng, n)`` draws states from the reference measure;
    ``noise(rng, states)`` applies one stochastic step of the dynamics to
    each state. The left side uses one independent step per state, the
    right side ``inner_draws`` fresh steps with an unbiased correction of
    the squared inner mean; pairing by state yields the reported standard
    error. With deterministic dynamics both sides coincide exactly.
    """
    if n < 1000:
        raise ValueError("need at least 1e3 samples for a meaningful check")
    if inner_draws < 2:
        raise ValueError("inner_draws must be >= 2 to estimate the variance")
    rng = np.random.default_rng(rng)
    states = sampler(rng, n)
    g2_vals = np.asarray(g2(states), dtype=complex)
    if not np.all(np.isfinite(g2_vals)):
        raise ValueError("g2 produced non-finite samples")

    stepped = np.asarray(g1(noise(rng, states)), dtype=complex)
    _require_finite(stepped)
    lhs_i = np.abs(stepped + g2_vals) ** 2

    draws = np.empty((inner_draws, n), dtype=complex)
    for k in range(inner_draws):
        draws[k] = np.asarray(g1(noise(rng, states)), dtype=complex)
        _require_finite(draws[k])
    mean = draws.mean(axis=0)
    var = np.sum(np.abs(draws - mean) ** 2, axis=0) / (inner_draws - 1)
    # |mean|^2 is biased upward by var/inner_draws
    rhs_i = (np.abs(mean + g2_vals) ** 2 - var / inner_draws) + var

    diff = lhs_i - rhs_i
    lhs = float(lhs_i.mean())
    rhs = float(rhs_i.mean())
    stderr = float(diff.std(ddof=1) / math.sqrt(n))
    scale = abs(lhs) if lhs != 0 else 1.0
    return BiasVarianceCheck(
        lhs=lhs,
        rhs=rhs,
        discrepancy=abs(lhs - rhs) / scale,
        stderr=stderr,
        n_samples=n,
    )


def _require_finite(arr):
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise ValueError(f"non-finite sample at index {bad[0]}")


def truncation_bounds(eigenvalues, mode_norms_sq, n_kept, observable_norm_sq=None):
    """Bounds on the squared error of restricting to the first ``n_kept`` modes.

    For orthonormal eigenfunctions the error lies between
    ``|lambda_{m+1}|^2 ||v_{m+1}||^2`` and
    ``|lambda_{m+1}|^2 ||g||^2`` where ``||g||^2`` defaults to the total
    squared mode mass.
    """
    eigs = np.asarray(eigenvalues, dtype=complex)
    norms = np.asarray(mode_norms_sq, dtype=float)
    if eigs.shape != norms.shape:
        raise ValueError("eigenvalues and mode_norms_sq must align")
    if not 1 <= n_kept < eigs.size:
        raise ValueError("n_kept must leave at least one truncated mode")
    lead = abs(eigs[n_kept]) ** 2
    total = float(norms.sum()) if observable_norm_sq is None else observable_norm_sq
    return lead * norms[n_kept], lead * total
