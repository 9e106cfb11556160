"""Command-line front end.

Four subcommands: ``estimate`` (fit shrinkage coefficients on a CSV of
samples), ``simulate`` (Monte Carlo NMSE benchmark), ``backtest`` (rolling
minimum-variance portfolio), and ``rda`` (discriminant-analysis error rates
over random splits).  Every subcommand is deterministic given its inputs,
flags and seed; tables use a stable column order with 6 significant digits
(full precision with ``--raw``), so runs can be diffed.

A flat ``key=value`` config file can be passed with ``--config``;
command-line flags win over file entries.  Errors exit nonzero after
printing a single machine-readable line ``error: <Type>: <message>`` to
stderr.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import dataio, plots
from .applications import BacktestConfig, run_backtest, train_rda, predict
from .applications import COVARIANCE_RULES, LabeledDataset
from .errors import EllShrinkError, ParameterError
from .estimators import (
    estimate_kurtosis,
    clamp_sphericity,
    estimate_scale,
    sphericity_ell1_raw,
    sphericity_ell2_raw,
)
from .matrixkit import sample_covariance
from .shrinkage import PLUGIN_METHODS, assemble_rscm, fit_many
from .sim import ExperimentConfig, run_nmse_experiment

#: Default master seed; per-trial and per-split streams are derived from it.
DEFAULT_SEED = 20180601


def _fmt(x, raw: bool) -> str:
    return repr(float(x)) if raw else f"{float(x):.6g}"


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(text: str, cast=float) -> tuple:
    """Grid syntax: ``a:b:c`` (inclusive range), ``x,y,z``, or a scalar."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("range needs start:stop:step")
            start, stop, step = (float(v) for v in parts)
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            if count < 1:
                raise ValueError("empty range")
            return tuple(cast(start + k * step) for k in range(count))
        if "," in text:
            return tuple(cast(float(v)) for v in text.split(",") if v.strip())
        return (cast(float(text)),)
    except ValueError as exc:
        raise ParameterError(f"cannot parse grid {text!r}: {exc}") from None


def _parse_spec(text: str) -> tuple:
    """Spectrum syntax: comma list of EIGENVALUExMULTIPLICITY."""
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            ev, mult = chunk.split("x")
            out.append((float(ev), int(mult)))
        except ValueError:
            raise ParameterError(
                f"cannot parse spectrum entry {chunk!r}; expected EIGxMULT"
            ) from None
    if not out:
        raise ParameterError(f"empty spectrum {text!r}")
    return tuple(out)


def _parse_family(text: str):
    text = text.strip().lower()
    if text == "gaussian":
        return "gaussian", None
    if text == "t":
        return "t", None
    if text.startswith("t:"):
        return "t", float(text[2:])
    raise ParameterError(f"unknown family {text!r}; expected gaussian or t:NU")


def _parse_methods(text: str, allowed) -> tuple:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    for m in methods:
        if m not in allowed:
            raise ParameterError(f"unknown estimator {m!r}; expected one of {allowed}")
    if not methods:
        raise ParameterError("no estimators requested")
    return methods


def _parse_ratio(text: str) -> float:
    """Train:test ratio such as 1:12 -> train fraction 1/13."""
    try:
        a, b = (float(v) for v in text.split(":"))
        if a <= 0 or b <= 0:
            raise ValueError
    except ValueError:
        raise ParameterError(f"cannot parse split ratio {text!r}") from None
    return a / (a + b)


def _config_to_flags(path) -> list:
    """Flatten a key=value config file into CLI flags (flags given on the
    command line override these, since later options win)."""
    flags = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ParameterError(
                    f"config line {lineno} is not key=value: {line.rstrip()!r}"
                )
            key, value = (s.strip() for s in stripped.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "false"):
                if value.lower() == "true":
                    flags.append(flag)
            else:
                flags.extend([flag, value])
    return flags


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellshrink",
        description="Shrinkage covariance estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file; flags win")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help=f"master seed (default {DEFAULT_SEED})")
        p.add_argument("--output", help="write the report here instead of stdout")
        p.add_argument("--raw", action="store_true",
                       help="full floating-point precision instead of 6 digits")

    p_est = sub.add_parser("estimate", help="fit shrinkage coefficients on a CSV")
    common(p_est)
    p_est.add_argument("--input", required=True, help="CSV of samples, one row each")
    p_est.add_argument("--estimators", default="ell1,ell2,ell3,gau,lw")
    p_est.add_argument("--cov-out", dest="cov_out",
                       help="prefix for per-method CSVs of the assembled estimate")

    p_sim = sub.add_parser("simulate", help="Monte Carlo NMSE benchmark")
    common(p_sim)
    p_sim.add_argument("generator", choices=["ar1", "spiked"])
    p_sim.add_argument("--p", type=int, help="dimension (ar1 and m-grid runs)")
    p_sim.add_argument("--rho", type=float, help="AR(1) coefficient in (0,1)")
    p_sim.add_argument("--spec", help="spectrum as EIGxMULT,... (spiked)")
    p_sim.add_argument("--eig-large", type=float, dest="eig_large",
                       help="large eigenvalue of the two-level spectrum (m grid)")
    p_sim.add_argument("--eig-small", type=float, dest="eig_small",
                       help="small eigenvalue of the two-level spectrum (m grid)")
    p_sim.add_argument("--n", help="sample size: scalar, a:b:c range, or comma list")
    p_sim.add_argument("--m", help="grid over the large-eigenvalue multiplicity")
    p_sim.add_argument("--nu", help="grid over the t degrees of freedom")
    p_sim.add_argument("--family", default="gaussian", help="gaussian or t:NU")
    p_sim.add_argument("--trials", type=int, default=10000)
    p_sim.add_argument("--estimators", default="ell1,ell2,ell3,lw")
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--plot", help="also render the curves to this image file")

    p_bt = sub.add_parser("backtest", help="rolling minimum-variance backtest")
    common(p_bt)
    p_bt.add_argument("--returns", required=True,
                      help="CSV with asset-name header and daily net returns")
    p_bt.add_argument("--windows", required=True,
                      help="training window lengths: scalar, a:b:c, or comma list")
    p_bt.add_argument("--hold", type=int, default=20, help="holding period in days")
    p_bt.add_argument("--estimators", default="ell1,ell2,ell3,lw")
    p_bt.add_argument("--plot", help="also render risk curves to this image file")

    p_rda = sub.add_parser("rda", help="discriminant analysis over random splits")
    common(p_rda)
    p_rda.add_argument("--data", required=True,
                       help="CSV of features with a final integer class column")
    p_rda.add_argument("--mode", choices=["lda", "qda"], default="lda")
    p_rda.add_argument("--splits", type=int, default=50)
    p_rda.add_argument("--ratio", default="1:12", help="train:test ratio")
    p_rda.add_argument("--estimators", default="none,ell1,ell2,ell3,gau,lw")
    p_rda.add_argument("--plot", help="also render box plots to this image file")
    return parser


def cmd_estimate(args) -> None:
    X = dataio.load_matrix_csv(args.input)
    methods = _parse_methods(args.estimators, PLUGIN_METHODS)
    n, p = X.shape
    S = sample_covariance(X)
    eta = estimate_scale(S)
    kappa = estimate_kurtosis(X)
    g1_raw = sphericity_ell1_raw(X)
    g2_raw = sphericity_ell2_raw(S, n, kappa)
    fits = fit_many(X, methods)

    lines = [
        f"n {n}",
        f"p {p}",
        f"eta {_fmt(eta, args.raw)}",
        f"kappa {_fmt(kappa, args.raw)}",
        f"gamma_ell1_raw {_fmt(g1_raw, args.raw)}",
        f"gamma_ell1 {_fmt(clamp_sphericity(g1_raw, p), args.raw)}",
        f"gamma_ell2_raw {_fmt(g2_raw, args.raw)}",
        f"gamma_ell2 {_fmt(clamp_sphericity(g2_raw, p), args.raw)}",
    ]
    for m in methods:
        lines.append(f"{m}_beta {_fmt(fits[m].beta, args.raw)}")
        lines.append(f"{m}_alpha {_fmt(fits[m].alpha, args.raw)}")
    _emit("\n".join(lines) + "\n", args.output)

    if args.cov_out:
        for m in methods:
            cov = assemble_rscm(S, fits[m]).values
            rows = "\n".join(",".join(repr(float(v)) for v in row) for row in cov)
            with open(f"{args.cov_out}_{m}.csv", "w", newline="\n") as fh:
                fh.write(rows + "\n")


def cmd_simulate(args) -> None:
    family, nu = _parse_family(args.family)
    estimators = _parse_methods(args.estimators, PLUGIN_METHODS)
    if args.m is not None:
        grid_name, grid = "m", _parse_grid(args.m, int)
    elif args.nu is not None:
        grid_name, grid = "nu", _parse_grid(args.nu, float)
        if family != "t" or nu is not None:
            raise ParameterError("a grid over nu needs --family t without :NU")
    else:
        if args.n is None:
            raise ParameterError("simulate needs --n (scalar or grid)")
        grid_name, grid = "n", _parse_grid(args.n, int)
    fixed_n = None
    if grid_name != "n":
        if args.n is None:
            raise ParameterError(f"a grid over {grid_name} needs a fixed --n")
        n_vals = _parse_grid(args.n, int)
        if len(n_vals) != 1:
            raise ParameterError(f"--n must be a single value with a {grid_name} grid")
        fixed_n = n_vals[0]

    spec = _parse_spec(args.spec) if args.spec else None
    eigs = None
    if args.eig_large is not None or args.eig_small is not None:
        if args.eig_large is None or args.eig_small is None:
            raise ParameterError("--eig-large and --eig-small go together")
        eigs = (args.eig_large, args.eig_small)

    cfg = ExperimentConfig(
        generator=args.generator,
        family=family,
        grid_name=grid_name,
        grid=grid,
        trials=args.trials,
        seed=args.seed,
        estimators=estimators,
        p=args.p,
        rho=args.rho,
        spec=spec,
        eigs=eigs,
        n=fixed_n,
        nu=nu,
        threads=args.threads,
    )
    result = run_nmse_experiment(cfg)
    _emit(result.to_table(raw=args.raw), args.output)
    if args.plot:
        plots.plot_experiment(result, args.plot)


def cmd_backtest(args) -> None:
    estimators = _parse_methods(args.estimators, COVARIANCE_RULES)
    windows = _parse_grid(args.windows, int)
    _, returns = dataio.load_returns_csv(args.returns)
    risk = np.empty((len(windows), len(estimators)))
    beta = np.empty((len(windows), len(estimators)))
    for wi, w in enumerate(windows):
        for ei, e in enumerate(estimators):
            report = run_backtest(
                BacktestConfig(returns=returns, window=w, rule=e, hold=args.hold)
            )
            risk[wi, ei] = report.realized_risk
            beta[wi, ei] = report.mean_beta

    header = ["n"]
    for e in estimators:
        header += [f"{e}_risk", f"{e}_beta"]
    rows = [header]
    for wi, w in enumerate(windows):
        cells = [str(w)]
        for ei in range(len(estimators)):
            cells += [_fmt(risk[wi, ei], args.raw), _fmt(beta[wi, ei], args.raw)]
        rows.append(cells)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    text = "\n".join(
        "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows
    )
    _emit(text + "\n", args.output)
    if args.plot:
        plots.plot_backtest(windows, estimators, risk, beta, args.plot)


def _stratified_split(data: LabeledDataset, frac: float, min_train: int, rng):
    train_mask = np.zeros(data.samples.shape[0], dtype=bool)
    for k in data.classes:
        idx = np.nonzero(data.labels == k)[0]
        n_train = max(min_train, int(round(frac * idx.size)))
        if n_train >= idx.size:
            raise ParameterError(
                f"class {k} has {idx.size} samples; cannot take {n_train} "
                f"for training and keep a test remainder"
            )
        chosen = rng.permutation(idx)[:n_train]
        train_mask[chosen] = True
    return train_mask


def cmd_rda(args) -> None:
    data = dataio.load_labeled_csv(args.data)
    methods = _parse_methods(args.estimators, COVARIANCE_RULES)
    frac = _parse_ratio(args.ratio)
    if args.splits < 1:
        raise ParameterError("splits must be >= 1")
    min_train = 2 if args.mode == "lda" else 4
    errors = np.empty((args.splits, len(methods)))
    for s in range(args.splits):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((args.seed, s))))
        mask = _stratified_split(data, frac, min_train, rng)
        train = LabeledDataset(data.samples[mask], data.labels[mask])
        X_test, y_test = data.samples[~mask], data.labels[~mask]
        for mi, m in enumerate(methods):
            model = train_rda(train, mode=args.mode, rule=m)
            errors[s, mi] = float(np.mean(predict(model, X_test) != y_test))

    header = ["split"] + [f"{m}_error" for m in methods]
    rows = [header]
    for s in range(args.splits):
        rows.append([str(s + 1)] + [_fmt(errors[s, mi], args.raw)
                                    for mi in range(len(methods))])
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    text = "\n".join(
        "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows
    )
    _emit(text + "\n", args.output)
    if args.plot:
        plots.plot_rda(methods, errors, args.plot)


_COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "backtest": cmd_backtest,
    "rda": cmd_rda,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # splice config-file entries in front of the user's flags so that
    # explicitly given flags win (later occurrences override earlier ones)
    try:
        for i, tok in enumerate(argv):
            if tok == "--config" and i + 1 < len(argv):
                argv = argv[:1] + _config_to_flags(argv[i + 1]) + argv[1:]
                break
            if tok.startswith("--config="):
                argv = argv[:1] + _config_to_flags(tok.split("=", 1)[1]) + argv[1:]
                break
        args = _build_parser().parse_args(argv)
        _COMMANDS[args.command](args)
    except EllShrinkError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
