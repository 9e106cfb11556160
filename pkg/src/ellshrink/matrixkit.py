"""Dense symmetric-matrix kernels used by every other module.

All functions are pure and operate on plain ndarrays or on the thin
:class:`CovarianceMatrix` wrapper, which enforces symmetry on construction
and tracks whether a positive-definite factorization has succeeded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, InsufficientSamplesError, SingularMatrixError

# Relative pivot tolerance for the positive-definite factorization: a pivot
# below PIVOT_RTOL * max(diag) is treated as a singularity.
PIVOT_RTOL = 1e-12


@dataclass
class CovarianceMatrix:
    """A p x p symmetric matrix with an SPD bookkeeping flag.

    Symmetry is enforced on construction by averaging with the transpose,
    so floating-point asymmetry never leaks into symmetric factorizations.
    ``spd_checked`` is flipped to True only after a successful Cholesky
    factorization of this matrix.
    """

    values: np.ndarray
    spd_checked: bool = False

    def __post_init__(self):
        A = np.asarray(self.values, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(
                f"covariance matrix must be square, got shape {A.shape}"
            )
        if A.shape[0] < 1:
            raise DimensionError("covariance matrix must have positive dimension")
        self.values = (A + A.T) / 2.0

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass
class CommutationMatrix:
    """The permutation sending vec(A) to vec(A^T), stored as an index map.

    vec() stacks columns, so entry (i, j) of a p x p matrix sits at vector
    position i + j*p.  The permutation is an involution; it is never stored
    densely except on explicit request for small p.
    """

    dim: int
    perm: np.ndarray = field(init=False)

    def __post_init__(self):
        p = self.dim
        if p < 1:
            raise DimensionError("commutation matrix needs positive dimension")
        k = np.arange(p * p)
        i, j = k % p, k // p
        self.perm = j + i * p

    def apply(self, v) -> np.ndarray:
        """Apply to a length p^2 vector: returns vec(A^T) for v = vec(A)."""
        v = np.asarray(v)
        if v.shape != (self.dim * self.dim,):
            raise DimensionError(
                f"expected vector of length {self.dim**2}, got shape {v.shape}"
            )
        return v[self.perm]

    def matmul_left(self, M) -> np.ndarray:
        """Return K @ M for a p^2 x p^2 matrix M (a row permutation)."""
        M = np.asarray(M)
        if M.shape != (self.dim**2, self.dim**2):
            raise DimensionError(f"expected {self.dim**2} square matrix")
        return M[self.perm, :]

    def to_dense(self) -> np.ndarray:
        """Dense p^2 x p^2 permutation matrix; only sensible for small p."""
        return np.eye(self.dim**2)[self.perm]


def matrix_values(M) -> np.ndarray:
    """Return the float ndarray behind ``M`` (wrapper or array-like)."""
    if isinstance(M, CovarianceMatrix):
        return M.values
    return np.asarray(M, dtype=float)


def as_samples(X) -> np.ndarray:
    """Coerce to an (n, p) float data matrix, one observation per row."""
    A = np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DimensionError(f"sample set must be 2-D, got {A.ndim}-D")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"sample set must be non-empty, got shape {A.shape}")
    return A


def trace(M) -> float:
    """Sum of diagonal entries of a square matrix."""
    A = matrix_values(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"trace needs a square matrix, got shape {A.shape}")
    return float(np.trace(A))


def frobenius_norm_sq(M) -> float:
    """Squared Frobenius norm tr(M^T M), i.e. the sum of squared entries."""
    A = matrix_values(M)
    return float(np.sum(A * A))


def _cholesky_by_columns(A: np.ndarray, tol: float) -> np.ndarray:
    """Column Cholesky that reports the failing pivot index.

    Used as the slow path when LAPACK refuses the matrix, so the error can
    name the pivot as required by the factorization contract.
    """
    p = A.shape[0]
    L = np.zeros_like(A)
    for j in range(p):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if not np.isfinite(pivot) or pivot < tol or pivot <= 0.0:
            raise SingularMatrixError(
                f"matrix is not positive definite: pivot {pivot:.3e} at index {j} "
                f"is below tolerance {tol:.3e}",
                pivot_index=j,
            )
        L[j, j] = np.sqrt(pivot)
        if j + 1 < p:
            L[j + 1 :, j] = (A[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def spd_cholesky(M) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    A pivot below ``PIVOT_RTOL * max(diag)`` triggers a
    :class:`SingularMatrixError` naming the failing pivot index.  When ``M``
    is a :class:`CovarianceMatrix`, its ``spd_checked`` flag is set on
    success.
    """
    A = matrix_values(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"factorization needs a square matrix, got {A.shape}")
    A = (A + A.T) / 2.0
    tol = PIVOT_RTOL * max(float(np.max(np.diag(A))), 0.0)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        # locate the failing pivot for the error message
        return _cholesky_by_columns(A, tol)
    pivots = np.diag(L) ** 2
    bad = np.nonzero(pivots < tol)[0]
    if bad.size:
        j = int(bad[0])
        raise SingularMatrixError(
            f"matrix is numerically singular: pivot {pivots[j]:.3e} at index {j} "
            f"is below tolerance {tol:.3e}",
            pivot_index=j,
        )
    if isinstance(M, CovarianceMatrix):
        M.spd_checked = True
    return L


def spd_inverse(M) -> CovarianceMatrix:
    """Inverse of a symmetric positive-definite matrix via Cholesky."""
    L = spd_cholesky(M)
    inv = scipy.linalg.cho_solve((L, True), np.eye(L.shape[0]), check_finite=False)
    return CovarianceMatrix(inv, spd_checked=True)


def centering_apply(X) -> np.ndarray:
    """Subtract each column's sample mean; column sums of the result are ~0."""
    A = as_samples(X)
    return A - A.mean(axis=0)


def sample_covariance(X) -> CovarianceMatrix:
    """Unbiased sample covariance of an (n, p) data matrix, divisor n - 1."""
    A = as_samples(X)
    n = A.shape[0]
    if n < 2:
        raise InsufficientSamplesError(
            f"sample covariance needs at least 2 observations, got {n}"
        )
    Xc = A - A.mean(axis=0)
    return CovarianceMatrix(Xc.T @ Xc / (n - 1))
