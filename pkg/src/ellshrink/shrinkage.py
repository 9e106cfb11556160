"""Shrinkage coefficient selection and estimator assembly.

The regularized estimator has the form beta * S + alpha * I, where S is the
sample covariance matrix.  The mean-square-optimal ("oracle") pair depends
on the population only through its scale, sphericity and elliptical
kurtosis, so plug-in estimators of those three parameters yield fully
data-driven coefficients.  Five plug-in rules are provided:

``ell1``  robust sphericity from the spatial sign covariance matrix
``ell2``  trace-based sphericity with finite-sample bias correction
``ell3``  hybrid: whichever of ell1/ell2 reports the smaller sphericity
``gau``   like ell2 but presuming zero elliptical kurtosis (Gaussian data)
``lw``    the classical Ledoit-Wolf coefficients, used as a baseline

The module also houses the closed-form finite-sample moment formulas for
the sample covariance matrix (its MSE, normalized MSE, expected traces and
the full covariance of vec(S)); those serve both as production formulas
and as test oracles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import estimators as est
from .errors import ClampWarning, InsufficientSamplesError, ParameterError
from .matrixkit import (
    CommutationMatrix,
    CovarianceMatrix,
    as_samples,
    frobenius_norm_sq,
    matrix_values,
    sample_covariance,
    trace,
)

#: Plug-in methods accepted by :func:`fit_many` and the fit_* helpers.
PLUGIN_METHODS = ("ell1", "ell2", "ell3", "gau", "lw")

#: All method tags, including the population-parameter oracle.
METHODS = ("oracle",) + PLUGIN_METHODS

_MIN_SAMPLES = {"ell1": 4, "ell2": 4, "ell3": 4, "gau": 3, "lw": 2}


@dataclass
class ShrinkageCoefficients:
    """The pair (alpha, beta) of a regularized covariance beta*S + alpha*I.

    ``method`` records which rule produced the pair and ``diagnostics``
    holds the intermediate estimates (scale, kurtosis, sphericity both raw
    and clamped, ...) where applicable.  beta always lies in [0, 1) and
    alpha equals (1 - beta) times the scale used.
    """

    alpha: float
    beta: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown method tag {self.method!r}")
        if not 0.0 <= self.beta < 1.0:
            raise ParameterError(f"beta {self.beta} outside [0, 1)")
        if self.alpha < 0.0:
            raise ParameterError(f"alpha {self.alpha} must be non-negative")


@dataclass
class MomentReport:
    """Closed-form finite-sample moments of the sample covariance matrix
    for a given population covariance, elliptical kurtosis and sample
    count: the MSE, the normalized MSE, E[tr(S^2)] and E[tr(S)^2]."""

    mse_scm: float
    nmse_scm: float
    e_tr_s2: float
    e_tr_s_sq: float


@dataclass
class VarVecDecomposition:
    """Structured form of the covariance of vec(S).

    tau1 = 1/(n-1) + kappa/n multiplies (I + K)(Sigma (x) Sigma) and
    tau2 = kappa/n multiplies vec(Sigma) vec(Sigma)^T; tau1 is the variance
    of any off-diagonal element of S divided by the corresponding product
    of variances, tau2 the analogous covariance of two diagonal elements.
    """

    sigma: CovarianceMatrix
    n: int
    kappa: float

    @property
    def tau1(self) -> float:
        return 1.0 / (self.n - 1) + self.kappa / self.n

    @property
    def tau2(self) -> float:
        return self.kappa / self.n

    def dense(self) -> np.ndarray:
        """Assemble the dense p^2 x p^2 matrix from the tau form."""
        A = self.sigma.values
        p = A.shape[0]
        K = CommutationMatrix(p)
        kron = np.kron(A, A)
        v = A.reshape(-1, order="F")
        return self.tau1 * (kron + K.matmul_left(kron)) + self.tau2 * np.outer(v, v)


def oracle_beta_general(gamma: float, nmse_scm: float) -> float:
    """Distribution-free oracle shrinkage weight on the sample covariance.

        beta = (gamma - 1) / ((gamma - 1) + gamma * NMSE(S))

    Returns 0 when gamma == 1 (spherical population, shrink fully to the
    scaled identity).  The limit NMSE -> 0 with gamma > 1 would give 1; it
    is clamped to 1 - 1e-12 with a :class:`ClampWarning` so the [0, 1)
    contract holds.
    """
    if gamma < 1.0:
        raise ParameterError(f"sphericity {gamma} below 1")
    if nmse_scm < 0.0:
        raise ParameterError(f"NMSE {nmse_scm} must be non-negative")
    if gamma == 1.0:
        return 0.0
    beta = (gamma - 1.0) / ((gamma - 1.0) + gamma * nmse_scm)
    if beta >= 1.0:
        warnings.warn(
            "oracle beta hit the open upper bound; clamped to 1 - 1e-12",
            ClampWarning,
            stacklevel=2,
        )
        beta = 1.0 - 1e-12
    return beta


def oracle_beta_elliptical(
    gamma: float, kappa: float, p: int, n: int, known_mean: bool = False
) -> float:
    """Oracle shrinkage weight under elliptical sampling.

        beta = (gamma - 1) /
               ((gamma - 1) + kappa (2 gamma + p)/n + (gamma + p)/(n - 1))

    ``known_mean=True`` replaces the last denominator term with
    (gamma + p)/n, matching the centered-data variant of the estimator.
    """
    if not 1.0 <= gamma <= p:
        raise ParameterError(f"sphericity {gamma} outside [1, {p}]")
    if kappa < -2.0 / (p + 2):
        raise ParameterError(f"kurtosis {kappa} below bound {-2.0 / (p + 2)}")
    if n < 2:
        raise InsufficientSamplesError(f"need n >= 2, got {n}")
    if gamma == 1.0:
        return 0.0
    tail = (gamma + p) / n if known_mean else (gamma + p) / (n - 1.0)
    return (gamma - 1.0) / ((gamma - 1.0) + kappa * (2.0 * gamma + p) / n + tail)


def oracle_mse_at_optimum(Sigma, beta_o: float) -> float:
    """MSE of the optimally shrunk estimator: (1 - beta_o) ||Sigma - eta I||_F^2."""
    if not 0.0 <= beta_o < 1.0:
        raise ParameterError(f"beta {beta_o} outside [0, 1)")
    A = matrix_values(Sigma)
    eta = trace(A) / A.shape[0]
    return (1.0 - beta_o) * frobenius_norm_sq(A - eta * np.eye(A.shape[0]))


def scm_moments(Sigma, kappa: float, n: int) -> MomentReport:
    """Finite-sample moments of the sample covariance under elliptical data.

        MSE(S)      = (1/(n-1) + kappa/n) tr(Sigma)^2
                      + (1/(n-1) + 2 kappa/n) tr(Sigma^2)
        NMSE(S)     = MSE(S) / tr(Sigma^2)
        E[tr(S^2)]  = MSE(S) + tr(Sigma^2)
        E[tr(S)^2]  = (1 + kappa/n) tr(Sigma)^2
                      + 2 (1/(n-1) + kappa/n) tr(Sigma^2)
    """
    if n < 2:
        raise InsufficientSamplesError(f"need n >= 2, got {n}")
    A = matrix_values(Sigma)
    A = (A + A.T) / 2.0
    if kappa < -2.0 / (A.shape[0] + 2):
        raise ParameterError(f"kurtosis {kappa} below the elliptical bound")
    tr_sq = trace(A) ** 2
    tr_s2 = frobenius_norm_sq(A)
    c1 = 1.0 / (n - 1) + kappa / n
    mse = c1 * tr_sq + (1.0 / (n - 1) + 2.0 * kappa / n) * tr_s2
    return MomentReport(
        mse_scm=mse,
        nmse_scm=mse / tr_s2,
        e_tr_s2=mse + tr_s2,
        e_tr_s_sq=(1.0 + kappa / n) * tr_sq + 2.0 * c1 * tr_s2,
    )


def var_vec_scm(Sigma, kappa: float, n: int, dense_cap: int = 8) -> np.ndarray:
    """Dense p^2 x p^2 covariance matrix of vec(S).

        (1/(n-1) + kappa/n) (I + K)(Sigma (x) Sigma)
        + (kappa/n) vec(Sigma) vec(Sigma)^T

    Exists as a closed-form reference for tests and diagnostics; the dense
    p^4 storage is capped at ``dense_cap`` (default 8).
    """
    A = matrix_values(Sigma)
    A = (A + A.T) / 2.0
    p = A.shape[0]
    if p > dense_cap:
        raise ParameterError(
            f"dimension {p} above the dense cap {dense_cap} for vec-covariance"
        )
    if n < 2:
        raise InsufficientSamplesError(f"need n >= 2, got {n}")
    return VarVecDecomposition(CovarianceMatrix(A), n, kappa).dense()


def assemble_rscm(S, coeffs: ShrinkageCoefficients) -> CovarianceMatrix:
    """Assemble beta * S + alpha * I; positive definite whenever alpha > 0."""
    A = matrix_values(S)
    if coeffs.alpha == 0.0 and coeffs.beta == 0.0:
        raise ParameterError("degenerate coefficients: alpha = beta = 0")
    return CovarianceMatrix(coeffs.beta * A + coeffs.alpha * np.eye(A.shape[0]))


def _lw_beta(Xc: np.ndarray, S: np.ndarray, eta: float):
    """Ledoit-Wolf shrinkage weight on S, plus its two ingredients."""
    n, p = Xc.shape
    d2 = frobenius_norm_sq(S - eta * np.eye(p))
    if d2 < 1e-14 * p:
        # spherical sample: shrink fully to the scaled identity
        return 0.0, 0.0, d2
    norms4 = np.sum(Xc**2, axis=1) ** 2
    quad = np.sum((Xc @ S) * Xc)
    b2 = (np.sum(norms4) - 2.0 * quad + n * frobenius_norm_sq(S)) / n**2
    b2 = min(b2, d2)
    return 1.0 - b2 / d2, b2, d2


def fit_many(X, methods=PLUGIN_METHODS) -> dict:
    """Fit several plug-in shrinkage rules on one dataset.

    Shared statistics (sample covariance, scale, kurtosis, each sphericity
    variant) are computed once, so requesting several methods costs little
    more than the most expensive single one.

    Parameters
    ----------
    X : (n, p) array
        Data matrix, one observation per row.
    methods : sequence of str
        Subset of ``PLUGIN_METHODS``.

    Returns
    -------
    dict
        Method tag -> :class:`ShrinkageCoefficients`.
    """
    A = as_samples(X)
    n, p = A.shape
    methods = tuple(dict.fromkeys(methods))
    for m in methods:
        if m not in PLUGIN_METHODS:
            raise ParameterError(
                f"unknown method {m!r}; expected one of {PLUGIN_METHODS}"
            )
        if n < _MIN_SAMPLES[m]:
            raise InsufficientSamplesError(
                f"method {m!r} needs at least {_MIN_SAMPLES[m]} observations, got {n}"
            )
    if not methods:
        raise ParameterError("no methods requested")

    S = sample_covariance(A)
    eta = trace(S) / p
    base = {"eta": eta, "n": n, "p": p}
    out = {}

    kappa = None
    if any(m in methods for m in ("ell1", "ell2", "ell3")):
        kappa = est.estimate_kurtosis(A)

    g1_raw = g1 = n_used = None
    if "ell1" in methods or "ell3" in methods:
        med = est.spatial_median(A)
        sgn = est.sign_covariance(A, med)
        n_used = sgn.n_used
        g1_raw = est.sphericity_from_sign(sgn)
        g1 = est.clamp_sphericity(g1_raw, p)

    g2_raw = g2 = None
    if "ell2" in methods or "ell3" in methods:
        g2_raw = est.sphericity_ell2_raw(S, n, kappa)
        g2 = est.clamp_sphericity(g2_raw, p)

    def make(method, gamma, gamma_raw, kap, extra=None):
        beta = oracle_beta_elliptical(gamma, kap, p, n)
        diag = dict(base, kappa=kap, gamma=gamma, gamma_raw=gamma_raw)
        if extra:
            diag.update(extra)
        return ShrinkageCoefficients(
            alpha=(1.0 - beta) * eta, beta=beta, method=method, diagnostics=diag
        )

    for m in methods:
        if m == "ell1":
            out[m] = make(m, g1, g1_raw, kappa, {"n_used": n_used})
        elif m == "ell2":
            out[m] = make(m, g2, g2_raw, kappa)
        elif m == "ell3":
            # hybrid rule: favor the smaller sphericity (more shrinkage);
            # ties go to the trace-based estimate
            if g1 < g2:
                out[m] = make(m, g1, g1_raw, kappa, {"branch": "ell1", "n_used": n_used})
            else:
                out[m] = make(m, g2, g2_raw, kappa, {"branch": "ell2"})
        elif m == "gau":
            gg_raw = est.sphericity_ell2_raw(S, n, 0.0)
            gg = est.clamp_sphericity(gg_raw, p)
            out[m] = make(m, gg, gg_raw, 0.0)
        elif m == "lw":
            Xc = A - A.mean(axis=0)
            beta, b2, d2 = _lw_beta(Xc, S.values, eta)
            out[m] = ShrinkageCoefficients(
                alpha=(1.0 - beta) * eta,
                beta=beta,
                method=m,
                diagnostics=dict(base, b_bar_sq=b2, d_sq=d2),
            )
    return out


def fit_ell1(X) -> ShrinkageCoefficients:
    """Coefficients driven by the sign-covariance (robust) sphericity."""
    return fit_many(X, ("ell1",))["ell1"]


def fit_ell2(X) -> ShrinkageCoefficients:
    """Coefficients driven by the bias-corrected trace sphericity."""
    return fit_many(X, ("ell2",))["ell2"]


def fit_ell3(X) -> ShrinkageCoefficients:
    """Hybrid rule: use whichever sphericity estimate is smaller."""
    return fit_many(X, ("ell3",))["ell3"]


def fit_gau(X) -> ShrinkageCoefficients:
    """Coefficients presuming Gaussian data (elliptical kurtosis zero)."""
    return fit_many(X, ("gau",))["gau"]


def fit_lw(X) -> ShrinkageCoefficients:
    """Classical Ledoit-Wolf coefficients (mean-centered variant)."""
    return fit_many(X, ("lw",))["lw"]
