"""Finite-dimensional Koopman approximations from snapshot data.

Two estimators share the same fitted surface: :class:`ExactDMD` uses the
identity dictionary on delay coordinates with an SVD-projected basis, and
:class:`KernelEDMD` builds an orthogonalized dictionary out of kernel
sections. Both expose the weighted Galerkin matrices needed downstream
for eigenpair residuals.

The fitted attributes follow scikit-learn conventions (trailing
underscore, ``fit`` returns ``self``), so the estimators compose with
``get_params`` / ``clone`` and the usual tooling.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator
from sklearn.metrics.pairwise import laplacian_kernel, polynomial_kernel, rbf_kernel
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix, check_weights
from .errors import DegenerateWindowError, RankError
from .timeseries import SnapshotSet

__all__ = [
    "KernelSpec",
    "DictionaryMatrices",
    "truncated_svd",
    "gram_matrices",
    "ExactDMD",
    "KernelEDMD",
    "exact_dmd",
    "kernel_edmd",
]

#: singular values below this fraction of the largest are treated as zero
SVD_TOL = 1e-12

_KERNEL_KINDS = ("polynomial", "rbf", "laplacian")


@dataclass(frozen=True)
class KernelSpec:
    """A positive-definite kernel choice.

    kinds: ``polynomial`` -> (gamma <a,b> + coef0)^degree,
    ``rbf`` -> exp(-gamma ||a-b||^2), ``laplacian`` -> exp(-gamma ||a-b||_1).
    """

    kind: str
    gamma: float
    degree: int = 2
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in _KERNEL_KINDS:
            raise ValueError(f"kind must be one of {_KERNEL_KINDS}, got {self.kind!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")

    @property
    def label(self):
        return f"{self.kind},{self.gamma:g}"

    def __call__(self, a_rows, b_rows):
        """Kernel matrix K[i, j] = S(a_i, b_j)."""
        a = as_matrix(a_rows, "a_rows")
        b = as_matrix(b_rows, "b_rows")
        if a.shape[1] != b.shape[1]:
            raise ValueError(f"dim mismatch: {a.shape[1]} vs {b.shape[1]}")
        if self.kind == "rbf":
            return rbf_kernel(a, b, gamma=self.gamma)
        if self.kind == "laplacian":
            return laplacian_kernel(a, b, gamma=self.gamma)
        return polynomial_kernel(
            a, b, degree=self.degree, gamma=self.gamma, coef0=self.coef0
        )


def gram_matrices(x_rows, y_rows, kernel):
    """Gram pair (Psi_X, Psi_Y) with Psi_X[i,j]=S(x_i,x_j), Psi_Y[i,j]=S(y_i,x_j)."""
    x = as_matrix(x_rows, "x_rows")
    y = as_matrix(y_rows, "y_rows")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"row count mismatch: {x.shape[0]} vs {y.shape[0]}")
    return kernel(x, x), kernel(y, x)


def truncated_svd(mat, r):
    """Top-r singular triplets ``(U_r, s_r, V_r)`` with V_r's columns the
    right singular vectors, so ``mat ~ U_r @ diag(s_r) @ V_r.conj().T``."""
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if not 1 <= r <= min(mat.shape):
        raise RankError(f"rank {r} out of range for shape {mat.shape}")
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    return u[:, :r], s[:r], vh[:r].conj().T


def _sorted_eig(k_matrix):
    """Eigendecomposition ordered by descending modulus, then Re, then Im."""
    eigvals, eigvecs = np.linalg.eig(k_matrix)
    order = np.lexsort((-eigvals.imag, -eigvals.real, -np.abs(eigvals)))
    return eigvals[order], eigvecs[:, order]


def _resolve_rank(singular_values, rank, energy, max_rank):
    """Effective truncation rank after dropping numerically zero directions.

    With ``rank=None`` picks the smallest rank capturing ``energy``
    cumulative squared singular mass, capped at ``max_rank``.
    """
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] <= 0:
        raise DegenerateWindowError("window has no signal (all singular values zero)")
    supported = int(np.sum(s > SVD_TOL * s[0]))
    if rank is not None:
        if rank < 1:
            raise RankError("rank must be >= 1")
        return min(rank, supported), supported
    energies = np.cumsum(s[:supported] ** 2)
    r = int(np.searchsorted(energies, energy * energies[-1])) + 1
    return min(r, supported, max_rank), supported


@dataclass(frozen=True)
class DictionaryMatrices:
    """Dictionary evaluations at snapshots plus quadrature weights."""

    psi_x: np.ndarray
    psi_y: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.psi_x.shape != self.psi_y.shape:
            raise ValueError("psi_x and psi_y must share a shape")
        check_weights(self.weights, self.psi_x.shape[0])
        for name in ("psi_x", "psi_y"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")


def _galerkin_eig(psi_x, psi_y, weights):
    """Solve the weighted Galerkin eigenproblem of the dictionary pair."""
    wx = weights[:, None] * psi_x
    g_xx = psi_x.conj().T @ wx
    g_xy = psi_x.conj().T @ (weights[:, None] * psi_y)
    k = np.linalg.pinv(g_xx, rcond=SVD_TOL) @ g_xy
    eigvals, eigvecs = _sorted_eig(k)
    return k, eigvals, eigvecs


def _check_not_constant(X, Y):
    if np.all(X == X[0]) and np.all(Y == Y[0]):
        raise DegenerateWindowError("window is constant; no dynamics to fit")


class ExactDMD(BaseEstimator):
    """Koopman approximation with the identity dictionary on delay data.

    The snapshot matrix (scaled by 1/T) is truncated to its top-``rank_``
    right singular subspace; both snapshot matrices are projected onto it
    (columns scaled by the inverse singular values) and the weighted
    least-squares one-step operator is eigendecomposed there.

    Parameters
    ----------
    rank : int or None
        Truncation rank. ``None`` keeps the smallest rank holding
        ``energy`` of the squared singular mass, capped at ``max_rank``.
        An explicit rank is reduced automatically if the data cannot
        support it (recorded in ``rank_``).
    energy : float
        Cumulative squared-singular-value fraction for the automatic rank.
    max_rank : int
        Cap for the automatic rank.

    Attributes
    ----------
    koopman_matrix_ : (r, r) ndarray
        Reduced one-step operator.
    eigenvalues_, eigenvectors_ : ndarray
        Eigenpairs sorted by descending modulus (ties: Re, then Im).
    psi_x_, psi_y_ : (T, r) ndarray
        Projected dictionary matrices used for residual evaluation.
    singular_values_ : ndarray
        Singular values of the scaled snapshot matrix.
    rank_ : int
        Effective rank actually used.
    """

    def __init__(self, rank=None, energy=0.999, max_rank=50):
        self.rank = rank
        self.energy = energy
        self.max_rank = max_rank

    def fit(self, X, Y=None, weights=None):
        """Fit from a :class:`SnapshotSet` or from paired matrices X, Y."""
        if isinstance(X, SnapshotSet):
            if Y is not None or weights is not None:
                raise ValueError("pass either a SnapshotSet or raw X/Y, not both")
            X, Y, weights = X.X, X.Y, X.weights
        if Y is None:
            raise ValueError("Y is required unless X is a SnapshotSet")
        X = as_matrix(X, "X")
        Y = as_matrix(Y, "Y")
        if X.shape != Y.shape:
            raise ValueError(f"X shape {X.shape} != Y shape {Y.shape}")
        T = X.shape[0]
        weights = (
            np.full(T, 1.0 / T) if weights is None else check_weights(weights, T)
        )
        if self.rank is not None and self.rank > min(X.shape):
            raise RankError(f"rank {self.rank} exceeds data shape {X.shape}")
        _check_not_constant(X, Y)

        _, s, vh = np.linalg.svd(X / T, full_matrices=False)
        r, supported = _resolve_rank(s, self.rank, self.energy, self.max_rank)
        if self.rank is not None and r < self.rank:
            warnings.warn(
                f"rank reduced from {self.rank} to {r} (numerically supported)",
                RuntimeWarning,
            )
        project = vh[:r].conj().T / s[:r]
        self.psi_x_ = X @ project
        self.psi_y_ = Y @ project
        self.weights_ = weights
        self.singular_values_ = s
        self.rank_ = r
        self.supported_rank_ = supported
        self.koopman_matrix_, self.eigenvalues_, self.eigenvectors_ = _galerkin_eig(
            self.psi_x_, self.psi_y_, weights
        )
        return self

    @property
    def dictionary_(self):
        check_is_fitted(self, "psi_x_")
        return DictionaryMatrices(self.psi_x_, self.psi_y_, self.weights_)

    def to_debug_dict(self):
        """JSON-friendly dump of the fitted operator for inspection."""
        check_is_fitted(self, "koopman_matrix_")
        return {
            "rank": int(self.rank_),
            "eigenvalues_real": self.eigenvalues_.real.tolist(),
            "eigenvalues_imag": self.eigenvalues_.imag.tolist(),
            "koopman_matrix_real": self.koopman_matrix_.real.tolist(),
            "koopman_matrix_imag": self.koopman_matrix_.imag.tolist(),
            "singular_values": np.asarray(self.singular_values_).tolist(),
        }


class KernelEDMD(BaseEstimator):
    """Koopman approximation in a kernel dictionary.

    The weighted Gram matrix is factored through its top-``rank_``
    singular subspace; the reduced operator's eigenvectors are
    orthogonalized by column-pivoted QR into a selected dictionary of
    kernel sections, in which the Galerkin eigenproblem is re-solved. The
    re-solved pairs and the selected dictionary matrices feed the
    residuals.

    Parameters are as in :class:`ExactDMD` plus the ``kernel``
    (:class:`KernelSpec`). Fitted attributes match :class:`ExactDMD`,
    with ``qr_pivots_`` recording the dictionary-selection pivoting.
    """

    def __init__(self, kernel=KernelSpec("rbf", 0.01), rank=None, energy=0.999,
                 max_rank=50):
        self.kernel = kernel
        self.rank = rank
        self.energy = energy
        self.max_rank = max_rank

    def fit(self, X, Y=None, weights=None):
        """Fit from a :class:`SnapshotSet` or from paired state rows X, Y."""
        if isinstance(X, SnapshotSet):
            if Y is not None or weights is not None:
                raise ValueError("pass either a SnapshotSet or raw X/Y, not both")
            X, Y, weights = X.X, X.Y, X.weights
        if Y is None:
            raise ValueError("Y is required unless X is a SnapshotSet")
        X = as_matrix(X, "X")
        Y = as_matrix(Y, "Y")
        T = X.shape[0]
        weights = (
            np.full(T, 1.0 / T) if weights is None else check_weights(weights, T)
        )
        if self.rank is not None and self.rank > T:
            raise RankError(f"rank {self.rank} exceeds {T} snapshot pairs")
        # constant windows are fine here: the kernel section at the constant
        # state represents identity dynamics exactly (residual 0)

        gram_x, gram_y = gram_matrices(X, Y, self.kernel)
        sqw = np.sqrt(weights)
        ax = sqw[:, None] * gram_x
        ay = sqw[:, None] * gram_y
        # sqrt(W) Psi_X Psi_X^* sqrt(W) = U diag(s^2) U^*
        sq_eigs, u = scipy.linalg.eigh(ax @ ax.conj().T)
        sq_eigs = np.maximum(sq_eigs[::-1], 0.0)
        u = u[:, ::-1]
        s = np.sqrt(sq_eigs)
        r, supported = _resolve_rank(s, self.rank, self.energy, self.max_rank)
        if self.rank is not None and r < self.rank:
            warnings.warn(
                f"rank reduced from {self.rank} to {r}: singular values below "
                f"{SVD_TOL:g} of the largest were dropped",
                RuntimeWarning,
            )
        u_r = u[:, :r]
        inv_s = 1.0 / s[:r]
        ktilde = (inv_s[:, None] * u_r.conj().T) @ (ay @ ax.conj().T) @ (
            u_r * inv_s[None, :]
        )
        _, z = _sorted_eig(ktilde)
        q, _, pivots = scipy.linalg.qr(
            z.astype(complex), mode="economic", pivoting=True
        )
        # selected dictionary: kernel sections mapped through U_r S^-1 Q
        transform = (u_r * inv_s[None, :]) @ q
        self.psi_x_ = gram_x @ transform
        self.psi_y_ = gram_y @ transform
        self.weights_ = weights
        self.singular_values_ = s
        self.rank_ = r
        self.supported_rank_ = supported
        self.qr_pivots_ = pivots
        self.ktilde_ = ktilde
        self.koopman_matrix_, self.eigenvalues_, self.eigenvectors_ = _galerkin_eig(
            self.psi_x_, self.psi_y_, weights
        )
        return self

    @property
    def dictionary_(self):
        check_is_fitted(self, "psi_x_")
        return DictionaryMatrices(self.psi_x_, self.psi_y_, self.weights_)

    def to_debug_dict(self):
        check_is_fitted(self, "koopman_matrix_")
        return {
            "kernel": self.kernel.label,
            "rank": int(self.rank_),
            "eigenvalues_real": self.eigenvalues_.real.tolist(),
            "eigenvalues_imag": self.eigenvalues_.imag.tolist(),
            "qr_pivots": np.asarray(self.qr_pivots_).tolist(),
            "singular_values": np.asarray(self.singular_values_).tolist(),
        }


def exact_dmd(snapshots, rank=None, **kwargs):
    """Functional form: fit :class:`ExactDMD` on a snapshot set."""
    return ExactDMD(rank=rank, **kwargs).fit(snapshots)


def kernel_edmd(x_rows, y_rows, weights, kernel, rank=None, **kwargs):
    """Functional form: fit :class:`KernelEDMD` on paired state rows."""
    return KernelEDMD(kernel=kernel, rank=rank, **kwargs).fit(
        x_rows, y_rows, weights
    )
