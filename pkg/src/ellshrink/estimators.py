"""Plug-in estimators of the population parameters that drive shrinkage.

Three quantities of the population covariance matrix are estimated from
data: the scale (mean eigenvalue), the sphericity (how far the covariance
is from a scaled identity, in [1, p]), and the elliptical kurtosis (one
third of the common marginal excess kurtosis, 0 for Gaussian data).

Two sphericity estimators are provided.  The first ("ell1") is built from
the spatial sign covariance matrix around the spatial median and is robust
to heavy tails.  The second ("ell2") is a bias-corrected function of
tr(S^2) and tr(S)^2 of the sample covariance matrix; it is cheaper and
efficient near Gaussianity but not robust.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DimensionError,
    InsufficientSamplesError,
    ParameterError,
)
from .matrixkit import as_samples, frobenius_norm_sq, matrix_values, trace


@dataclass
class PopulationParams:
    """Scale, sphericity and elliptical kurtosis of a p-variate population.

    Invariants: eta > 0, 1 <= gamma <= dim, kappa >= -2/(dim + 2).
    """

    eta: float
    gamma: float
    kappa: float
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dimension must be positive, got {self.dim}")
        if not self.eta > 0:
            raise ParameterError(f"scale must be positive, got {self.eta}")
        if not 1.0 <= self.gamma <= self.dim:
            raise ParameterError(
                f"sphericity {self.gamma} outside [1, {self.dim}]"
            )
        if self.kappa < -2.0 / (self.dim + 2):
            raise ParameterError(
                f"kurtosis {self.kappa} below lower bound {-2.0 / (self.dim + 2)}"
            )


@dataclass
class SignCovariance:
    """Average outer product of unit-normalized centered samples.

    Trace is 1 up to rounding; ``n_used`` counts the samples that were not
    excluded as coincident with the center.
    """

    values: np.ndarray
    n_used: int

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass
class ThetaCoefficients:
    """Finite-sample bias-correction pair (a_n, b_n) for tr(S^2)-based
    estimation, as functions of the sample count and the elliptical
    kurtosis.  At kappa = 0 they reduce to a_n = n/(n-1) and
    b_n = (n-1)^2 / ((n-2)(n+1))."""

    a_n: float
    b_n: float
    n: int
    kappa: float


def estimate_scale(S) -> float:
    """Scale estimate tr(S)/p, the mean eigenvalue of S."""
    A = matrix_values(S)
    return trace(A) / A.shape[0]


def true_sphericity(Sigma) -> float:
    """Sphericity p * tr(Sigma^2) / tr(Sigma)^2 of a symmetric PSD matrix.

    Equals 1 iff Sigma is a scaled identity and p for rank-one matrices.

    Raises
    ------
    DegenerateDataError
        If the trace is not positive.
    """
    A = matrix_values(Sigma)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"sphericity needs a square matrix, got {A.shape}")
    A = (A + A.T) / 2.0
    t = float(np.trace(A))
    if t <= 0.0:
        raise DegenerateDataError(f"sphericity undefined for trace {t}")
    p = A.shape[0]
    return p * frobenius_norm_sq(A) / t**2


def estimate_kurtosis(X) -> float:
    """Elliptical kurtosis estimate from the marginal sample kurtoses.

    Each column's excess kurtosis is estimated with the standard
    bias-corrected statistic

        K_j = (n-1) / ((n-2)(n-3)) * ((n+1) * k_j + 6),

    where k_j = m4_j / m2_j^2 - 3 uses central moments with divisor n.  The
    estimate is the column average divided by 3, clamped from below at the
    theoretical bound -2/(p+2).

    Parameters
    ----------
    X : (n, p) array
        Data matrix, one observation per row; needs n >= 4 and positive
        sample variance in every column.
    """
    A = as_samples(X)
    n, p = A.shape
    if n < 4:
        raise InsufficientSamplesError(
            f"kurtosis estimation needs at least 4 observations, got {n}"
        )
    Xc = A - A.mean(axis=0)
    m2 = np.mean(Xc**2, axis=0)
    m4 = np.mean(Xc**4, axis=0)
    col_scale = np.max(np.abs(A), axis=0)
    degenerate = m2 <= (1e-12 * col_scale) ** 2
    if np.any(degenerate):
        j = int(np.nonzero(degenerate)[0][0])
        raise DegenerateDataError(
            f"column {j} has zero sample variance", column=j
        )
    k_hat = m4 / m2**2 - 3.0
    K_hat = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * k_hat + 6.0)
    return max(-2.0 / (p + 2), float(np.mean(K_hat)) / 3.0)


def spatial_median(X, tol: float = 1e-8, max_iter: int = 1000) -> np.ndarray:
    """Point minimizing the sum of Euclidean distances to the samples.

    Uses the classical fixed-point iteration started at the coordinate-wise
    median, with the Vardi-Zhang safeguard when an iterate lands on a data
    point: the anchored point is returned if it satisfies the subgradient
    optimality condition, otherwise the iterate is pushed a small step along
    the descent direction.  Iterations stop once the summed unit-vector
    gradient is below ``tol`` per sample (the iteration keeps polishing well
    past that internally, until the fixed point stalls at machine
    precision).

    For two samples the midpoint is returned (any point of the segment
    minimizes; the coordinate-wise median start is already stationary).

    Raises
    ------
    ConvergenceError
        If ``max_iter`` iterations did not reach ``tol``; carries the last
        iterate and its residual.
    """
    A = as_samples(X)
    n, p = A.shape
    if n == 1:
        return A[0].copy()
    scale = float(np.mean(np.linalg.norm(A, axis=1)))
    if scale == 0.0:
        return np.zeros(p)
    near_tol = 1e-12 * scale
    push = 1e-8 * scale
    y = np.median(A, axis=0)
    gnorm = np.inf
    for _ in range(max_iter):
        diff = A - y
        d = np.linalg.norm(diff, axis=1)
        near = d < near_tol
        far = ~near
        if not np.any(far):
            return y
        inv = 1.0 / d[far]
        pull = (diff[far] * inv[:, None]).sum(axis=0)
        gnorm = float(np.linalg.norm(pull))
        k_near = int(np.count_nonzero(near))
        if k_near:
            if gnorm <= k_near + 1e-12 * n:
                return y
            y = y + push * pull / gnorm
            continue
        if gnorm <= 1e-13 * n:
            return y
        y_new = (A[far] * inv[:, None]).sum(axis=0) / inv.sum()
        step = float(np.linalg.norm(y_new - y))
        y = y_new
        if step <= 1e-14 * scale and gnorm <= tol * n:
            return y
    if gnorm <= tol * n:
        return y
    raise ConvergenceError(
        f"spatial median did not converge in {max_iter} iterations "
        f"(residual {gnorm / n:.3e} per sample, tolerance {tol:.1e})",
        last_iterate=y,
        residual=gnorm / n,
    )


def sign_covariance(X, center) -> SignCovariance:
    """Spatial sign covariance: mean outer product of unit-normed samples.

    Samples closer to ``center`` than 1e-12 times the average centered norm
    are excluded; ``n_used`` reports how many remain.  The result has unit
    trace by construction.

    Raises
    ------
    DegenerateDataError
        If every sample coincides with the center.
    """
    A = as_samples(X)
    c = np.asarray(center, dtype=float).reshape(-1)
    if c.shape[0] != A.shape[1]:
        raise DimensionError(
            f"center has length {c.shape[0]}, expected {A.shape[1]}"
        )
    diff = A - c
    d = np.linalg.norm(diff, axis=1)
    avg = float(np.mean(d))
    if avg == 0.0:
        raise DegenerateDataError("all samples coincide with the center")
    keep = d >= 1e-12 * avg
    m = int(np.count_nonzero(keep))
    if m == 0:
        raise DegenerateDataError("all samples are degenerate at the center")
    V = diff[keep] / d[keep, None]
    return SignCovariance(values=V.T @ V / m, n_used=m)


def sphericity_from_sign(sgn: SignCovariance) -> float:
    """Unclamped sphericity from a sign covariance matrix.

    Equals (m/(m-1)) * (p * tr(Ssgn^2) - p/m) with m = ``n_used``, which is
    also p times the average squared cosine between distinct centered
    samples.
    """
    m = sgn.n_used
    if m < 2:
        raise InsufficientSamplesError(
            f"sphericity needs at least 2 usable samples, got {m}"
        )
    p = sgn.dim
    return (m / (m - 1.0)) * (p * frobenius_norm_sq(sgn.values) - p / m)


def clamp_sphericity(value: float, p: int) -> float:
    return min(float(p), max(1.0, value))


def sphericity_ell1_raw(X) -> float:
    """Sign-covariance sphericity estimate before clamping to [1, p]."""
    A = as_samples(X)
    med = spatial_median(A)
    return sphericity_from_sign(sign_covariance(A, med))


def sphericity_ell1(X) -> float:
    """Sign-covariance sphericity estimate, clamped to the valid [1, p]."""
    A = as_samples(X)
    return clamp_sphericity(sphericity_ell1_raw(A), A.shape[1])


def theta_coefficients(n: int, kappa: float) -> ThetaCoefficients:
    """Bias-correction coefficients for mean-square-eigenvalue estimation.

        a_n = (n / (n + kappa)) * (n/(n-1) + kappa)
        b_n = (kappa + n)(n-1)^2 / ((n-2)(3 kappa (n-1) + n(n+1)))

    Raises
    ------
    InsufficientSamplesError
        If n <= 2 (b_n divides by n - 2).
    ParameterError
        If a denominator is within 1e-12 of zero.
    """
    if n <= 2:
        raise InsufficientSamplesError(
            f"theta coefficients need at least 3 observations, got {n}"
        )
    den1 = n + kappa
    den2 = (n - 2.0) * (3.0 * kappa * (n - 1.0) + n * (n + 1.0))
    if abs(den1) < 1e-12 or abs(den2) < 1e-12:
        raise ParameterError(
            f"coefficient singularity at n={n}, kappa={kappa}"
        )
    a_n = (n / den1) * (n / (n - 1.0) + kappa)
    b_n = (kappa + n) * (n - 1.0) ** 2 / den2
    return ThetaCoefficients(a_n=a_n, b_n=b_n, n=n, kappa=kappa)


def estimate_theta(S, n: int, kappa: float) -> float:
    """Unbiased estimate of the mean squared eigenvalue tr(Sigma^2)/p.

    Computed from the sample covariance S as

        theta = b_n * (tr(S^2)/p - a_n * (p/n) * (tr(S)/p)^2),

    which is unbiased for any finite n when ``kappa`` is the population
    elliptical kurtosis.
    """
    A = matrix_values(S)
    A = (A + A.T) / 2.0
    p = A.shape[0]
    tc = theta_coefficients(n, kappa)
    return tc.b_n * (
        frobenius_norm_sq(A) / p - tc.a_n * (p / n) * (trace(A) / p) ** 2
    )


def sphericity_ell2_raw(S, n: int, kappa_hat: float) -> float:
    """Trace-based sphericity estimate before clamping to [1, p]."""
    A = matrix_values(S)
    A = (A + A.T) / 2.0
    t = float(np.trace(A))
    if t <= 0.0:
        raise DegenerateDataError(f"sphericity undefined for trace {t}")
    p = A.shape[0]
    tc = theta_coefficients(n, kappa_hat)
    return tc.b_n * (p * frobenius_norm_sq(A) / t**2 - tc.a_n * p / n)


def sphericity_ell2(S, n: int, kappa_hat: float) -> float:
    """Trace-based sphericity estimate, clamped to the valid [1, p]."""
    A = matrix_values(S)
    return clamp_sphericity(sphericity_ell2_raw(A, n, kappa_hat), A.shape[0])
