"""Command-line front end.

Subcommands: score, hampel, cricket, mortality, expt1, expt2, evt-check.
Exit codes: 0 success, 2 validation error, 3 numerical fit failure.
Set SURPRISAL_THREADS to cap replication parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import evt, plots
from .applications import (
    cricket_anomalies,
    load_cricket_csv,
    load_mortality_csv,
    mortality_anomalies,
)
from .conditional import hampel_assumed_probs, hampel_series
from .distributions import parse_model
from .errors import ArityError, FitError, SurprisalError, ValidationError
from .experiments import (
    false_rate_config,
    run_expt_false_rate,
    run_expt_univariate,
    summarize_expt1,
    univariate_config,
)
from .scoring import SurprisalSample, compute_surprisals, flag_anomalies, tail_probs

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_FIT = 3


def _read_numeric_csv(path):
    """Header plus float matrix; malformed rows raise with their line number."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read input: {exc}")
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError(f"{path}: input CSV is empty")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ValidationError(
                    f"{path} line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise ValidationError(f"{path} line {lineno}: non-numeric value in {row!r}")
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return header, np.asarray(rows)


def _write_table(table: pd.DataFrame, path: Path, fmt: str):
    if fmt == "json":
        path.write_text(json.dumps(table.to_dict(orient="records"), indent=2, default=str))
    else:
        table.to_csv(path, index=False)


def _emit(table: pd.DataFrame, args, default_stem: str):
    """Write the table when --output is given; return the path stem for figures."""
    if args.output:
        out = Path(args.output)
        _write_table(table, out, args.format)
        print(f"wrote {out}")
        return out.with_suffix("")
    return Path(default_stem)


def _maybe_plot(render, args, stem: Path):
    if getattr(args, "plot", False):
        png = stem.with_suffix(".png")
        render(png)
        print(f"wrote {png}")


def cmd_score(args) -> int:
    header, data = _read_numeric_csv(args.input)
    model = parse_model(args.model)
    k = model.arity
    if k == 1:
        if data.shape[1] != 1:
            raise ArityError(
                f"model {model.describe()} expects one value column, CSV has {data.shape[1]}"
            )
        values = data[:, 0]
    else:
        if data.shape[1] != k:
            raise ArityError(
                f"model {model.describe()} expects {k} value columns, CSV has {data.shape[1]}"
            )
        values = data
    sample = compute_surprisals(model, values)
    estimate = tail_probs(sample, args.estimator, model=model, beta=args.beta, mc_seed=args.seed)
    report = flag_anomalies(estimate, args.alpha)

    table = pd.DataFrame(data, columns=header)
    table["surprisal"] = sample.surprisals
    table["p"] = estimate.probs
    flagged = np.zeros(len(table), dtype=bool)
    flagged[report.flagged] = True
    table["flagged"] = flagged

    stem = _emit(table, args, "surprisal_score")
    print(
        f"scored {len(table)} observations under {model.describe()} "
        f"[{args.estimator}]: {flagged.sum()} flagged at alpha={args.alpha:g}"
    )
    if args.estimator == "gpd":
        print("tail fit:", estimate.params["fit"].to_json())
    _maybe_plot(lambda p: plots.plot_scores(table, args.alpha, p), args, stem)
    return EXIT_OK


def cmd_hampel(args) -> int:
    header, data = _read_numeric_csv(args.input)
    if "value" in header:
        values = data[:, header.index("value")]
    elif len(header) == 1:
        values = data[:, 0]
    else:
        raise ValidationError("hampel input needs a 'value' column or a single column")
    series = hampel_series(values, args.window, min_scale=args.min_scale)
    sample = SurprisalSample(
        observations=series.values,
        surprisals=series.surprisals,
        model_description=f"hampel(h={args.window})",
    )
    if args.estimator == "assumed":
        estimate = hampel_assumed_probs(series)
    else:
        estimate = tail_probs(sample, args.estimator, beta=args.beta)
    report = flag_anomalies(estimate, args.alpha)

    table = pd.DataFrame(
        {
            "value": series.values,
            "median": series.medians,
            "mad": series.mads,
            "surprisal": series.surprisals,
            "p": estimate.probs,
        }
    )
    flagged = np.zeros(len(table), dtype=bool)
    flagged[report.flagged] = True
    table["flagged"] = flagged
    stem = _emit(table, args, "surprisal_hampel")
    print(
        f"hampel(h={args.window}) [{args.estimator}]: "
        f"{flagged.sum()} of {len(table)} points flagged at alpha={args.alpha:g}"
    )
    _maybe_plot(lambda p: plots.plot_scores(table, args.alpha, p), args, stem)
    return EXIT_OK


def cmd_mortality(args) -> int:
    df = load_mortality_csv(args.input)
    result = mortality_anomalies(
        df,
        h=args.window,
        alpha=args.alpha,
        beta=args.beta,
        min_count=args.min_group,
        log_rates=not args.no_log_rates,
        pooling=args.pooling,
    )
    table = result.table
    stem = _emit(table, args, "surprisal_mortality")
    print(
        f"{len(table)} observations: {result.n_flagged_raw} flagged at alpha={args.alpha:g}, "
        f"{result.n_flagged} kept after the >={args.min_group}-ages-per-(year,sex) filter"
    )
    for sex, fit in result.fits.items():
        print(f"tail fit [{sex}]:", fit.to_json())
    kept = table[table["flagged"]]
    groups = kept.groupby(["sex", "year"]).size().sort_values(ascending=False)
    if len(groups):
        print("anomalous (sex, year) groups:")
        for (sex, year), count in groups.items():
            print(f"  {sex} {year}: {count} ages")
    _maybe_plot(lambda p: plots.plot_mortality(table, p), args, stem)
    return EXIT_OK


def cmd_cricket(args) -> int:
    df = load_cricket_csv(args.input)
    result = cricket_anomalies(df, beta=args.beta, alpha=args.alpha, estimator=args.estimator)
    print(f"pooled not-out proportion: {result.pooled_proportion:.3f}")
    table = result.table
    stem = _emit(table, args, "surprisal_cricket")
    if result.tail_fit is not None:
        print("tail fit:", result.tail_fit.to_json())
    top = table.head(10)[["rank", "player", "innings", "notouts", "fitted_prob", "surprisal", "p"]]
    print(top.to_string(index=False))
    _maybe_plot(lambda p: plots.plot_cricket(table, p), args, stem)
    return EXIT_OK


def cmd_expt1(args) -> int:
    reps = 100 if args.fast else args.reps
    config = univariate_config(
        truth=args.truth, n=args.n, reps=reps, seed=args.seed, beta=args.beta
    )
    table = run_expt_univariate(config)
    summary = summarize_expt1(table)
    stem = _emit(table, args, "surprisal_expt1")
    if args.plot_data:
        pivot = summary.pivot_table(
            index="y", columns=["distribution_used", "estimator"], values="p_estimate"
        )
        pivot.columns = [f"{d}|{e}" for d, e in pivot.columns]
        pivot["p_true"] = summary.drop_duplicates("y").set_index("y")["p_true"]
        fig_path = stem.parent / (stem.name + "_figure.csv")
        pivot.to_csv(fig_path)
        print(f"wrote {fig_path}")
    print(summary.to_string(index=False, float_format=lambda v: f"{v:.6f}"))
    _maybe_plot(lambda p: plots.plot_expt1(summary, p), args, stem)
    return EXIT_OK


def cmd_expt2(args) -> int:
    reps = 100 if args.fast else args.reps
    n_grid = tuple(int(x) for x in args.n_grid.split(","))
    config = false_rate_config(
        n_grid=n_grid, reps=reps, alpha=args.alpha, seed=args.seed, beta=args.beta
    )
    result = run_expt_false_rate(config)
    stem = _emit(result.table, args, "surprisal_expt2")
    print(result.table.to_string(index=False, float_format=lambda v: f"{v:.5f}"))
    if len(result.empirical_identity):
        ident_path = stem.parent / (stem.name + "_identity.csv")
        if args.output:
            result.empirical_identity.to_csv(ident_path, index=False)
            print(f"wrote {ident_path}")
        print("empirical flag-set identity vs true model:")
        print(result.empirical_identity.to_string(index=False))
    if args.plot_data and args.output:
        pivot = result.table.pivot_table(
            index="n", columns=["assumed_model", "estimator"], values="mean_flag_rate"
        )
        pivot.columns = [f"{m}|{e}" for m, e in pivot.columns]
        fig_path = stem.parent / (stem.name + "_figure.csv")
        pivot.to_csv(fig_path)
        print(f"wrote {fig_path}")
    _maybe_plot(lambda p: plots.plot_expt2(result.table, p, alpha=args.alpha), args, stem)
    return EXIT_OK


def cmd_evt_check(args) -> int:
    reps = 500 if args.fast else args.reps
    rows = []
    for i, (name, study, kind, grid) in enumerate(evt.default_studies(args.n, reps, args.seed)):
        maxima = evt.simulate_max_distribution(study, args.seed + 1000 + i)
        checks = evt.check_tail_bound(study, kind, grid, args.seed, maxima=maxima)
        for rec in evt.checks_to_rows(checks):
            rows.append({"study": name, **rec})
    table = pd.DataFrame(rows)
    stem = _emit(table, args, "surprisal_evt")
    print(table.to_string(index=False, float_format=lambda v: f"{v:.6g}"))
    failed = int((~table["pass"]).sum())
    print(f"{len(table) - failed}/{len(table)} bound checks passed")
    _maybe_plot(lambda p: plots.plot_evt(table, p), args, stem)
    return EXIT_OK


def _add_common(p, input_required=True):
    p.add_argument("--input", "-i", required=input_required, help="input CSV path")
    p.add_argument("--output", "-o", help="output file path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plot", action="store_true", help="render a PNG figure next to the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surprisal",
        description="Surprisal-based anomaly detection: score data under a model "
        "and estimate tail probabilities with assumed, empirical, or "
        "generalized-Pareto estimators.",
        epilog="Set SURPRISAL_THREADS to cap parallel replication work.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("score", help="score a CSV of observations under a model")
    _add_common(p)
    p.add_argument("--model", required=True, help="model spec, e.g. 'normal(mu=0,sigma=1)'")
    p.add_argument("--estimator", choices=("assumed", "empirical", "gpd"), default="empirical")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.1)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("hampel", help="rolling median/MAD conditional-Normal scoring of a series")
    _add_common(p)
    p.add_argument("--window", type=int, default=10, help="half window h")
    p.add_argument("--min-scale", type=float, default=None)
    p.add_argument("--estimator", choices=("assumed", "empirical", "gpd"), default="assumed")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.1)
    p.set_defaults(func=cmd_hampel)

    p = sub.add_parser("mortality", help="mortality anomaly pipeline (year/age/sex/rate CSV)")
    _add_common(p)
    p.add_argument("--window", type=int, default=10, help="half window h")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--min-group", type=int, default=3)
    p.add_argument("--no-log-rates", action="store_true", help="score raw rates, not log rates")
    p.add_argument("--pooling", choices=("sex", "all"), default="sex")
    p.set_defaults(func=cmd_mortality)

    p = sub.add_parser("cricket", help="not-out anomaly pipeline (player/innings/notouts CSV)")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--estimator", choices=("gpd", "empirical"), default="gpd")
    p.set_defaults(func=cmd_cricket)

    p = sub.add_parser("expt1", help="univariate misspecification study")
    _add_common(p, input_required=False)
    p.add_argument("--truth", choices=("normal", "t4"), default="normal")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--fast", action="store_true", help="100 replications")
    p.add_argument("--plot-data", action="store_true", help="also write a figure-shaped CSV")
    p.set_defaults(func=cmd_expt1)

    p = sub.add_parser("expt2", help="bivariate false-anomaly-rate study")
    _add_common(p, input_required=False)
    p.add_argument("--n-grid", default="100,200,500,1000,2000,5000,10000")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--fast", action="store_true", help="100 replications")
    p.add_argument("--plot-data", action="store_true", help="also write a figure-shaped CSV")
    p.set_defaults(func=cmd_expt2)

    p = sub.add_parser("evt-check", help="maximum-surprisal tail-bound checks")
    _add_common(p, input_required=False)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--fast", action="store_true", help="500 replications")
    p.set_defaults(func=cmd_evt_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ValidationError, ArityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SurprisalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
