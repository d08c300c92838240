"""Report figures rendered to files alongside the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(str(path), dpi=150)
    plt.close(fig)
    return path


def plot_expt1(summary: pd.DataFrame, path):
    """Tail-probability estimates against the truth on the |y| grid."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    truth = summary.drop_duplicates("y").sort_values("y")
    ax.plot(truth["y"], truth["p_true"], color="black", lw=2, label="true")
    for (dist, est), grp in summary.groupby(["distribution_used", "estimator"]):
        grp = grp.sort_values("y")
        style = "--" if "t(" in dist else "-"
        ax.plot(grp["y"], grp["p_estimate"], style, lw=1, alpha=0.8, label=f"{est}, {dist}")
    ax.set_yscale("log")
    ax.set_xlabel("y")
    ax.set_ylabel("tail probability")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_expt2(table: pd.DataFrame, path, alpha: float = 0.01):
    """False anomaly rate against sample size per model and estimator."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (model, est), grp in table.groupby(["assumed_model", "estimator"]):
        grp = grp.sort_values("n")
        line = ax.plot(grp["n"], grp["mean_flag_rate"], "o-", ms=3, lw=1, label=f"{est}, {model}")
        ax.fill_between(grp["n"], grp["ci_low"], grp["ci_high"], alpha=0.15, color=line[0].get_color())
    ax.axhline(alpha, color="black", ls=":", lw=1)
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("flag rate")
    ax.legend(fontsize=6)
    return _save(fig, path)


def plot_evt(rows: pd.DataFrame, path):
    """Empirical exceedance frequency against the theoretical bound."""
    studies = rows["study"].unique()
    fig, axes = plt.subplots(1, len(studies), figsize=(4 * len(studies), 3.5), squeeze=False)
    for ax, study in zip(axes[0], studies):
        grp = rows[rows["study"] == study].sort_values("s")
        ax.plot(grp["s"], grp["bound"], "k--", label="bound")
        colors = np.where(grp["pass"], "tab:blue", "tab:red")
        ax.scatter(grp["s"], grp["empirical_prob"], c=colors, s=25, label="empirical")
        ax.set_yscale("log")
        ax.set_title(study, fontsize=9)
        ax.set_xlabel("s")
        ax.legend(fontsize=7)
    axes[0][0].set_ylabel("exceedance probability")
    return _save(fig, path)


def plot_scores(table: pd.DataFrame, alpha: float, path):
    """Surprisal histogram with flagged observations marked."""
    fig, ax = plt.subplots(figsize=(7, 4))
    finite = table["surprisal"][np.isfinite(table["surprisal"])]
    ax.hist(finite, bins=60, color="lightsteelblue", edgecolor="none")
    flagged = table[table["flagged"] & np.isfinite(table["surprisal"])]
    if len(flagged):
        ax.plot(flagged["surprisal"], np.zeros(len(flagged)), "|", color="crimson",
                ms=18, mew=1.5, label=f"flagged (alpha={alpha:g})")
        ax.legend(fontsize=8)
    ax.set_xlabel("surprisal")
    ax.set_ylabel("count")
    return _save(fig, path)


def plot_mortality(table: pd.DataFrame, path):
    """Anomaly map: flagged (year, age) cells per sex."""
    sexes = sorted(table["sex"].unique())
    fig, axes = plt.subplots(1, len(sexes), figsize=(5 * len(sexes), 4), squeeze=False, sharey=True)
    for ax, sex in zip(axes[0], sexes):
        sub = table[table["sex"] == sex]
        raw = sub[sub["flagged_raw"] & ~sub["flagged"]]
        kept = sub[sub["flagged"]]
        ax.scatter(raw["year"], raw["age"], s=4, color="silver", label="filtered out")
        ax.scatter(kept["year"], kept["age"], s=6, color="crimson", label="anomaly")
        ax.set_title(sex, fontsize=10)
        ax.set_xlabel("year")
        ax.legend(fontsize=7, loc="upper right")
    axes[0][0].set_ylabel("age")
    return _save(fig, path)


def plot_cricket(table: pd.DataFrame, path):
    """Not-out proportion against innings with the fitted curve and top anomaly."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.scatter(table["innings"], table["notouts"] / table["innings"],
               s=6, alpha=0.25, color="tab:gray", label="batters")
    curve = table.drop_duplicates("innings").sort_values("innings")
    ax.plot(curve["innings"], curve["fitted_prob"], color="tab:blue", lw=1.5, label="fitted")
    top = table.iloc[0]
    ax.scatter([top["innings"]], [top["notouts"] / top["innings"]],
               s=60, color="crimson", zorder=5, label="top anomaly")
    ax.set_xscale("log")
    ax.set_xlabel("innings")
    ax.set_ylabel("proportion of not outs")
    ax.legend(fontsize=8)
    return _save(fig, path)
