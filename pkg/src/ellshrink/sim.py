"""Elliptical samplers, structured covariance generators, and the Monte
Carlo harness that benchmarks shrinkage rules by normalized MSE.

Reproducibility contract: every trial draws from its own RNG stream keyed
by (master seed, grid index, trial index), and per-trial statistics are
stored in slot arrays before averaging, so results are bit-identical
across runs and independent of the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .errors import EllShrinkError, ExperimentError, ParameterError
from .estimators import true_sphericity
from .matrixkit import (
    CovarianceMatrix,
    frobenius_norm_sq,
    matrix_values,
    sample_covariance,
    spd_cholesky,
    trace,
)
from .shrinkage import (
    PLUGIN_METHODS,
    ShrinkageCoefficients,
    fit_many,
    oracle_beta_elliptical,
)

_FAMILIES = ("gaussian", "t")


@dataclass
class EllipticalModel:
    """A sampling model: Gaussian or multivariate t with nu > 4.

    The covariance field is the actual covariance matrix of the draws (the
    t draws are rescaled so the scatter matrix equals the covariance), so
    closed-form moment formulas apply to it directly.  The population
    elliptical kurtosis is 0 for Gaussian and 2/(nu - 4) for t.
    """

    family: str
    mean: np.ndarray
    covariance: CovarianceMatrix
    nu: float | None = None
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterError(
                f"unknown family {self.family!r}; expected one of {_FAMILIES}"
            )
        if self.family == "t":
            if self.nu is None or not self.nu > 4:
                raise ParameterError(
                    f"t family needs nu > 4 for finite fourth moments, got {self.nu}"
                )
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if not isinstance(self.covariance, CovarianceMatrix):
            self.covariance = CovarianceMatrix(matrix_values(self.covariance))
        if self.mean.shape[0] != self.covariance.dim:
            raise ParameterError(
                f"mean length {self.mean.shape[0]} does not match "
                f"covariance dimension {self.covariance.dim}"
            )

    @property
    def kurtosis(self) -> float:
        """Population elliptical kurtosis of the model."""
        return 0.0 if self.family == "gaussian" else 2.0 / (self.nu - 4.0)

    def cholesky(self) -> np.ndarray:
        """Lower factor of the covariance, cached after the first call."""
        if self._chol is None:
            self._chol = spd_cholesky(self.covariance)
        return self._chol


def ar1_covariance(p: int, rho: float) -> CovarianceMatrix:
    """First-order autoregressive covariance: entry (i, j) is rho^|i-j|.

    The diagonal is all ones, so the scale tr/p equals 1 for every rho.
    """
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"AR(1) coefficient must be in (0, 1), got {rho}")
    if p < 1:
        raise ParameterError(f"dimension must be positive, got {p}")
    idx = np.arange(p)
    return CovarianceMatrix(rho ** np.abs(np.subtract.outer(idx, idx)))


def spiked_covariance(spec) -> CovarianceMatrix:
    """Diagonal covariance with a stepwise spectrum.

    ``spec`` is a sequence of (eigenvalue, multiplicity) pairs; the result
    is the diagonal matrix whose spectrum repeats each eigenvalue with its
    multiplicity, in the given order.
    """
    diag = []
    for ev, mult in spec:
        if not ev > 0:
            raise ParameterError(f"eigenvalue must be positive, got {ev}")
        if int(mult) != mult or mult < 1:
            raise ParameterError(f"multiplicity must be a positive integer, got {mult}")
        diag.extend([float(ev)] * int(mult))
    if not diag:
        raise ParameterError("empty spectrum specification")
    return CovarianceMatrix(np.diag(diag))


def random_mean(p: int, rng: np.random.Generator) -> np.ndarray:
    """Mean vector with i.i.d. normal entries of variance 4."""
    return 2.0 * rng.standard_normal(p)


def _draw(L, family, nu, mean, n, rng):
    """n rows from the model whose covariance factors as L L^T."""
    z = rng.standard_normal((n, L.shape[0]))
    x = z @ L.T
    if family == "t":
        # chi-square mixing; the sqrt((nu-2)/w) scaling makes the draw
        # covariance equal L L^T exactly, not just proportional to it
        w = rng.chisquare(nu, size=n)
        x *= np.sqrt((nu - 2.0) / w)[:, None]
    return x + mean


def sample(model: EllipticalModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. observations from the model, one per row."""
    if n < 1:
        raise ParameterError(f"sample size must be positive, got {n}")
    return _draw(model.cholesky(), model.family, model.nu, model.mean, n, rng)


@dataclass
class ExperimentConfig:
    """Declarative description of one NMSE benchmarking experiment.

    The grid runs over the sample size ``n``, over the large-eigenvalue
    multiplicity ``m`` of a two-level spectrum, or over the t degrees of
    freedom ``nu``.  Whichever of those is not on the grid is fixed by the
    corresponding field.
    """

    generator: str                       # "ar1" | "spiked"
    family: str                          # "gaussian" | "t"
    grid_name: str                       # "n" | "m" | "nu"
    grid: tuple
    trials: int
    seed: int
    estimators: tuple = PLUGIN_METHODS
    p: int | None = None
    rho: float | None = None             # ar1 generator
    spec: tuple | None = None             # spiked generator, fixed spectrum
    eigs: tuple | None = None             # spiked generator, (large, small) for the m grid
    n: int | None = None                  # fixed sample size for m / nu grids
    nu: float | None = None               # fixed degrees of freedom
    threads: int = 1
    max_failure_rate: float = 0.01

    def __post_init__(self):
        self.grid = tuple(self.grid)
        self.estimators = tuple(dict.fromkeys(self.estimators))
        if self.generator not in ("ar1", "spiked"):
            raise ParameterError(f"unknown generator {self.generator!r}")
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if self.grid_name not in ("n", "m", "nu"):
            raise ParameterError(f"unknown grid {self.grid_name!r}")
        if not self.grid:
            raise ParameterError("empty grid")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ParameterError("seed must be a non-negative integer")
        bad = [e for e in self.estimators if e not in PLUGIN_METHODS + ("oracle",)]
        if bad:
            raise ParameterError(f"unknown estimator tags {bad}")
        if not self.estimators:
            raise ParameterError("no estimators configured")
        if self.generator == "ar1":
            if self.p is None or self.rho is None:
                raise ParameterError("ar1 generator needs p and rho")
        elif self.grid_name == "m":
            if self.eigs is None or self.p is None:
                raise ParameterError(
                    "a grid over m needs a two-level spectrum: eigs=(large, small) and p"
                )
        elif self.spec is None:
            raise ParameterError("spiked generator needs a spectrum spec")
        if self.grid_name != "n" and self.n is None:
            raise ParameterError(f"grid over {self.grid_name!r} needs a fixed n")
        if self.grid_name == "nu":
            if self.family != "t":
                raise ParameterError("a grid over nu needs the t family")
            if any(not g > 4 for g in self.grid):
                raise ParameterError("nu grid values must exceed 4")
        if self.family == "t" and self.grid_name != "nu" and not (self.nu or 0) > 4:
            raise ParameterError("t family needs nu > 4")
        if self.threads < 1:
            raise ParameterError("threads must be >= 1")

    def resolve(self, g):
        """Return (n, Sigma, nu) at grid value g."""
        n = int(g) if self.grid_name == "n" else int(self.n)
        nu = float(g) if self.grid_name == "nu" else self.nu
        if self.generator == "ar1":
            sigma = ar1_covariance(self.p, self.rho)
        elif self.grid_name == "m":
            m = int(g)
            if not 1 <= m <= self.p:
                raise ParameterError(f"m={m} outside [1, {self.p}]")
            spec = [(self.eigs[0], m)]
            if m < self.p:
                spec.append((self.eigs[1], self.p - m))
            sigma = spiked_covariance(spec)
        else:
            sigma = spiked_covariance(self.spec)
        return n, sigma, nu


@dataclass
class ExperimentResult:
    """Per grid point and estimator: mean NMSE, mean shrinkage weight, and
    the Monte Carlo standard error of the NMSE, next to the closed-form
    optimum (oracle) NMSE and shrinkage weight computed from the true
    population parameters."""

    grid_name: str
    grid: tuple
    estimators: tuple
    nmse: np.ndarray          # (grid, estimator) means
    beta: np.ndarray          # (grid, estimator) means
    se: np.ndarray            # (grid, estimator) standard errors of the NMSE
    oracle_nmse: np.ndarray   # (grid,)
    oracle_beta: np.ndarray   # (grid,)
    failures: np.ndarray      # (grid,) excluded trial counts
    trials: int

    def to_table(self, raw: bool = False) -> str:
        """Whitespace-delimited table, one row per grid value.

        Columns: ``grid``, then ``<est>_nmse <est>_beta <est>_se`` per
        estimator, then ``oracle_nmse``.  Values use 6 significant digits
        (full precision with ``raw=True``); the layout is stable so output
        can be diffed and plotted directly.
        """
        if "oracle" in self.estimators:
            raise ParameterError(
                "the 'oracle' estimator tag collides with the oracle_nmse "
                "column; read the result fields directly"
            )
        header = ["grid"]
        for e in self.estimators:
            header += [f"{e}_nmse", f"{e}_beta", f"{e}_se"]
        header.append("oracle_nmse")
        rows = [header]
        for gi, g in enumerate(self.grid):
            cells = [_format_grid(g)]
            for ei in range(len(self.estimators)):
                cells += [
                    _format_value(self.nmse[gi, ei], raw),
                    _format_value(self.beta[gi, ei], raw),
                    _format_value(self.se[gi, ei], raw),
                ]
            cells.append(_format_value(self.oracle_nmse[gi], raw))
            rows.append(cells)
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        return "\n".join(lines) + "\n"


def _format_grid(g) -> str:
    if float(g).is_integer():
        return str(int(g))
    return repr(float(g))


def _format_value(x: float, raw: bool) -> str:
    return repr(float(x)) if raw else f"{x:.6g}"


def _oracle_coefficients(eta, gamma, kappa, p, n) -> ShrinkageCoefficients:
    beta = oracle_beta_elliptical(gamma, kappa, p, n)
    return ShrinkageCoefficients(
        alpha=(1.0 - beta) * eta,
        beta=beta,
        method="oracle",
        diagnostics={"eta": eta, "gamma": gamma, "kappa": kappa, "n": n, "p": p},
    )


def run_nmse_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the configured Monte Carlo comparison.

    For each grid value and trial: draw a mean vector (normal, variance 4)
    and a sample from the configured model, fit every configured estimator,
    and record the squared Frobenius error of the assembled estimate
    relative to the squared Frobenius norm of the true covariance, plus the
    fitted shrinkage weight.  Trials in which an estimator raises are
    excluded and counted; more than ``max_failure_rate`` of failed trials
    aborts the experiment.
    """
    G, T = len(cfg.grid), cfg.trials
    ests = cfg.estimators
    E = len(ests)
    plug = tuple(e for e in ests if e != "oracle")
    nmse = np.full((G, T, E), np.nan)
    beta = np.full((G, T, E), np.nan)
    failed = np.zeros((G, T), dtype=bool)
    oracle_nmse = np.zeros(G)
    oracle_beta = np.zeros(G)

    for gi, g in enumerate(cfg.grid):
        n, sigma, nu = cfg.resolve(g)
        sig = sigma.values
        p = sig.shape[0]
        L = spd_cholesky(sig)
        eta = trace(sig) / p
        gamma = true_sphericity(sig)
        kappa = 0.0 if cfg.family == "gaussian" else 2.0 / (nu - 4.0)
        denom = frobenius_norm_sq(sig)
        b_o = oracle_beta_elliptical(gamma, kappa, p, n)
        oracle_beta[gi] = b_o
        oracle_nmse[gi] = (
            (1.0 - b_o) * frobenius_norm_sq(sig - eta * np.eye(p)) / denom
        )
        eye = np.eye(p)

        def one_trial(ti, gi=gi, n=n, nu=nu, sig=sig, L=L, p=p, eta=eta,
                      gamma=gamma, kappa=kappa, denom=denom, eye=eye):
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((cfg.seed, gi, ti)))
            )
            mu = random_mean(p, rng)
            X = _draw(L, cfg.family, nu, mu, n, rng)
            try:
                fits = fit_many(X, plug) if plug else {}
                if "oracle" in ests:
                    fits["oracle"] = _oracle_coefficients(eta, gamma, kappa, p, n)
                S = sample_covariance(X).values
            except EllShrinkError:
                failed[gi, ti] = True
                return
            for ei, e in enumerate(ests):
                co = fits[e]
                err = co.beta * S + co.alpha * eye - sig
                nmse[gi, ti, ei] = frobenius_norm_sq(err) / denom
                beta[gi, ti, ei] = co.beta

        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                list(pool.map(one_trial, range(T)))
        else:
            for ti in range(T):
                one_trial(ti)

        n_failed = int(failed[gi].sum())
        if n_failed > cfg.max_failure_rate * T:
            raise ExperimentError(
                f"{n_failed} of {T} trials failed at grid value {g!r} "
                f"(budget {cfg.max_failure_rate:.1%})",
                index=gi,
            )

    valid = ~failed
    counts = valid.sum(axis=1)
    mean_nmse = np.nanmean(nmse, axis=1)
    mean_beta = np.nanmean(beta, axis=1)
    if T > 1:
        sd = np.nanstd(nmse, axis=1, ddof=1)
        se = sd / np.sqrt(np.maximum(counts, 1))[:, None]
    else:
        se = np.zeros((G, E))
    return ExperimentResult(
        grid_name=cfg.grid_name,
        grid=cfg.grid,
        estimators=ests,
        nmse=mean_nmse,
        beta=mean_beta,
        se=se,
        oracle_nmse=oracle_nmse,
        oracle_beta=oracle_beta,
        failures=(T - counts).astype(int),
        trials=T,
    )
