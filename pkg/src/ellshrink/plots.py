"""Figure rendering for the CLI report paths.

Figures are written straight to files (Agg backend), one per report, next
to the delimited tables the commands emit.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_MARKERS = ("o", "^", "s", "*", "d", "v", "P")


def plot_experiment(result, path) -> None:
    """NMSE and mean shrinkage weight versus the grid, one line per
    estimator, with the closed-form optimum drawn solid black."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 4.2))
    x = np.asarray(result.grid, dtype=float)
    ax1.plot(x, result.oracle_nmse, "k-", lw=2, label="theory")
    ax2.plot(x, result.oracle_beta, "k-", lw=2, label="theory")
    for ei, e in enumerate(result.estimators):
        mk = _MARKERS[ei % len(_MARKERS)]
        ax1.plot(x, result.nmse[:, ei], marker=mk, label=e)
        ax2.plot(x, result.beta[:, ei], marker=mk, label=e)
    ax1.set_xlabel(result.grid_name)
    ax1.set_ylabel("NMSE")
    ax2.set_xlabel(result.grid_name)
    ax2.set_ylabel("mean shrinkage weight")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_backtest(windows, estimators, risk, beta, path) -> None:
    """Realized risk and mean shrinkage weight versus the window length."""
    risk = np.asarray(risk)
    beta = np.asarray(beta)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 4.2))
    x = np.asarray(windows, dtype=float)
    for ei, e in enumerate(estimators):
        mk = _MARKERS[ei % len(_MARKERS)]
        ax1.plot(x, risk[:, ei], marker=mk, label=e)
        if np.isfinite(beta[:, ei]).any():
            ax2.plot(x, beta[:, ei], marker=mk, label=e)
    ax1.set_xlabel("window length")
    ax1.set_ylabel("annualized realized risk")
    ax2.set_xlabel("window length")
    ax2.set_ylabel("mean shrinkage weight")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_rda(methods, error_rates, path) -> None:
    """Box plots of per-split misclassification rates, one box per method."""
    rates = np.asarray(error_rates)
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(methods), 4.2))
    ax.boxplot([rates[:, mi] for mi in range(len(methods))], tick_labels=list(methods))
    ax.set_ylabel("misclassification rate")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
