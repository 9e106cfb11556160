"""Discriminant analysis and minimum-variance portfolio backtesting built
on the shrinkage estimators."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    EllShrinkError,
    ExperimentError,
    InsufficientSamplesError,
    ParameterError,
)
from .matrixkit import (
    CovarianceMatrix,
    as_samples,
    matrix_values,
    sample_covariance,
    spd_cholesky,
)
from .shrinkage import PLUGIN_METHODS, ShrinkageCoefficients, assemble_rscm, fit_many

#: Covariance rules accepted by the applications; "none"/"scm" means the
#: plain (unregularized) sample covariance.
COVARIANCE_RULES = PLUGIN_METHODS + ("none", "scm")


def _is_plain(rule: str) -> bool:
    if rule not in COVARIANCE_RULES:
        raise ParameterError(
            f"unknown covariance rule {rule!r}; expected one of {COVARIANCE_RULES}"
        )
    return rule in ("none", "scm")


@dataclass
class LabeledDataset:
    """Samples with integer class labels 1..K, every class present."""

    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.samples = as_samples(self.samples)
        self.labels = np.asarray(self.labels)
        if self.labels.shape != (self.samples.shape[0],):
            raise DimensionError(
                f"labels shape {self.labels.shape} does not match "
                f"{self.samples.shape[0]} samples"
            )
        if not np.issubdtype(self.labels.dtype, np.integer):
            as_int = self.labels.astype(int)
            if not np.array_equal(as_int, self.labels):
                raise ParameterError("class labels must be integers")
            self.labels = as_int
        classes = np.unique(self.labels)
        if not np.array_equal(classes, np.arange(1, classes.size + 1)):
            raise ParameterError(
                f"class labels must be exactly 1..K, got {classes.tolist()}"
            )

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels)[1:]


@dataclass
class DiscriminantModel:
    """Trained classifier state: class means, covariance(s) with cached
    inverses and log-determinants, and the coefficients that produced them.

    ``mode`` is "lda" (one shared covariance) or "qda" (one per class).
    """

    mode: str
    rule: str
    classes: np.ndarray
    means: np.ndarray                       # (K, p)
    covariances: list                       # CovarianceMatrix per class
    inverses: list = field(repr=False)      # ndarray per class
    log_dets: list = field(repr=False)
    coefficients: list = field(default_factory=list)  # ShrinkageCoefficients | None


def pooled_scm(data: LabeledDataset) -> CovarianceMatrix:
    """Convex combination of class covariances with weights (n_k - 1)/(n - K)."""
    X, y = data.samples, data.labels
    n = X.shape[0]
    classes = data.classes
    K = classes.size
    if n <= K:
        raise InsufficientSamplesError(
            f"pooled covariance needs more samples ({n}) than classes ({K})"
        )
    pooled = np.zeros((X.shape[1], X.shape[1]))
    for k in classes:
        Xk = X[y == k]
        if Xk.shape[0] < 2:
            raise InsufficientSamplesError(
                f"class {k} has {Xk.shape[0]} samples; pooling needs at least 2"
            )
        pooled += (Xk.shape[0] - 1) / (n - K) * sample_covariance(Xk).values
    return CovarianceMatrix(pooled)


def _finalize(cov: CovarianceMatrix):
    """Factor once; reuse for both the inverse and the log-determinant."""
    L = spd_cholesky(cov)
    inv = scipy.linalg.cho_solve((L, True), np.eye(L.shape[0]), check_finite=False)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    return inv, log_det


def train_rda(data: LabeledDataset, mode: str = "lda", rule: str = "ell1") -> DiscriminantModel:
    """Train a (regularized) discriminant classifier.

    LDA fits the shrinkage coefficients once on the class-mean-centered
    data and applies them to the pooled covariance; QDA fits per class.
    With ``rule="none"`` the plain sample covariances are used, giving the
    classical LDA/QDA baselines (which require invertible covariances).
    """
    if mode not in ("lda", "qda"):
        raise ParameterError(f"mode must be 'lda' or 'qda', got {mode!r}")
    plain = _is_plain(rule)
    X, y = data.samples, data.labels
    classes = data.classes
    K = classes.size
    means = np.stack([X[y == k].mean(axis=0) for k in classes])

    if mode == "lda":
        if X.shape[0] <= K:
            raise InsufficientSamplesError(
                f"LDA needs more samples ({X.shape[0]}) than classes ({K})"
            )
        pooled = pooled_scm(data)
        if plain:
            cov, coeffs = pooled, None
        else:
            centered = X - means[y - 1]
            coeffs = fit_many(centered, (rule,))[rule]
            cov = assemble_rscm(pooled, coeffs)
        inv, log_det = _finalize(cov)
        return DiscriminantModel(
            mode=mode,
            rule=rule,
            classes=classes,
            means=means,
            covariances=[cov] * K,
            inverses=[inv] * K,
            log_dets=[log_det] * K,
            coefficients=[coeffs] * K,
        )

    covs, invs, dets, allco = [], [], [], []
    for k in classes:
        Xk = X[y == k]
        if plain:
            cov, coeffs = sample_covariance(Xk), None
        else:
            coeffs = fit_many(Xk, (rule,))[rule]
            cov = assemble_rscm(sample_covariance(Xk), coeffs)
        inv, log_det = _finalize(cov)
        covs.append(cov)
        invs.append(inv)
        dets.append(log_det)
        allco.append(coeffs)
    return DiscriminantModel(
        mode=mode,
        rule=rule,
        classes=classes,
        means=means,
        covariances=covs,
        inverses=invs,
        log_dets=dets,
        coefficients=allco,
    )


def discriminant_scores(model: DiscriminantModel, X) -> np.ndarray:
    """Per-class scores (x - mean)^T Cov^{-1} (x - mean) + log|Cov|.

    Lower is better; shape (n, K).
    """
    A = as_samples(X)
    if A.shape[1] != model.means.shape[1]:
        raise DimensionError(
            f"samples have {A.shape[1]} features, model expects {model.means.shape[1]}"
        )
    scores = np.empty((A.shape[0], model.classes.size))
    for ki in range(model.classes.size):
        D = A - model.means[ki]
        scores[:, ki] = np.einsum("ij,jk,ik->i", D, model.inverses[ki], D)
        scores[:, ki] += model.log_dets[ki]
    return scores


def predict(model: DiscriminantModel, X) -> np.ndarray:
    """Class assignments for each row of X; ties go to the smaller class id."""
    scores = discriminant_scores(model, X)
    return model.classes[np.argmin(scores, axis=1)]


def classify(model: DiscriminantModel, x) -> int:
    """Class assignment for a single observation vector."""
    return int(predict(model, np.asarray(x, dtype=float).reshape(1, -1))[0])


def gmvp_weights(Sigma_hat) -> np.ndarray:
    """Minimum-variance portfolio weights Sigma^{-1} 1 / (1^T Sigma^{-1} 1).

    The weights sum to one; short positions (negative weights) are allowed.
    """
    A = matrix_values(Sigma_hat)
    L = spd_cholesky(A)
    y = scipy.linalg.cho_solve((L, True), np.ones(A.shape[0]), check_finite=False)
    return y / y.sum()


@dataclass
class BacktestConfig:
    """Rolling minimum-variance backtest configuration.

    At each rebalance the covariance rule is fitted on the previous
    ``window`` rows of ``returns``; the resulting weights are held for
    ``hold`` days.  Realized risk is the sample standard deviation of all
    out-of-sample daily portfolio returns times ``annualization``.
    """

    returns: np.ndarray          # (T, p) net returns
    window: int
    rule: str = "ell1"
    hold: int = 20
    annualization: float = sqrt(250.0)

    def __post_init__(self):
        self.returns = as_samples(self.returns)
        _is_plain(self.rule)
        if self.hold < 1:
            raise ParameterError(f"hold must be >= 1, got {self.hold}")
        if self.window < 2:
            raise ParameterError(f"window must be >= 2, got {self.window}")
        if self.window + self.hold > self.returns.shape[0]:
            raise ParameterError(
                f"window {self.window} + hold {self.hold} exceeds the "
                f"{self.returns.shape[0]} available rows"
            )


@dataclass
class BacktestReport:
    """Out-of-sample results of one rolling backtest."""

    realized_risk: float
    mean_beta: float              # nan for the plain sample covariance
    n_rebalances: int
    daily_returns: np.ndarray     # (T - window,) portfolio returns


def run_backtest(cfg: BacktestConfig) -> BacktestReport:
    """Run the rolling backtest described by ``cfg``.

    Rebalances start right after the first full window and step by
    ``hold`` days; the final partial holding period is included, so every
    day past the initial window contributes one portfolio return.
    """
    R = cfg.returns
    T, p = R.shape
    plain = _is_plain(cfg.rule)
    out = np.empty(T - cfg.window)
    betas = []
    pos = 0
    for t in range(cfg.window, T, cfg.hold):
        train = R[t - cfg.window : t]
        if np.all(train == train[0]):
            # zero-variation window: every feasible portfolio has the same
            # (zero) estimated risk, so take the symmetric solution
            w = np.full(p, 1.0 / p)
            stop = min(t + cfg.hold, T)
            out[pos : pos + stop - t] = R[t:stop] @ w
            pos += stop - t
            continue
        try:
            if plain:
                sig = sample_covariance(train)
            else:
                coeffs = fit_many(train, (cfg.rule,))[cfg.rule]
                betas.append(coeffs.beta)
                sig = assemble_rscm(sample_covariance(train), coeffs)
            w = gmvp_weights(sig)
        except EllShrinkError as exc:
            raise ExperimentError(
                f"covariance rule {cfg.rule!r} failed at rebalance window "
                f"starting at row {t - cfg.window}: {exc}",
                index=t - cfg.window,
            ) from exc
        stop = min(t + cfg.hold, T)
        out[pos : pos + stop - t] = R[t:stop] @ w
        pos += stop - t
    risk = cfg.annualization * float(np.std(out, ddof=1)) if out.size > 1 else 0.0
    return BacktestReport(
        realized_risk=risk,
        mean_beta=float(np.mean(betas)) if betas else float("nan"),
        n_rebalances=len(range(cfg.window, T, cfg.hold)),
        daily_returns=out,
    )
