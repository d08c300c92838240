"""End-to-end application pipelines.

* Mortality: per-series rolling median/MAD conditional Normal surprisals
  on log rates, pooled peaks-over-threshold tail per sex, flags at alpha,
  then a per-(year, sex) group filter that keeps a year only when several
  ages are anomalous together.
* Cricket not-outs: Binomial success smooth in the innings count,
  per-batter surprisals, peaks-over-threshold anomaly probabilities, and
  a table ranked most-anomalous first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .conditional import BinomialSmoothFit, binomial_surprisals, fit_binomial_smooth, hampel_series
from .errors import ValidationError
from .gpd import GpdFit
from .scoring import empirical_tail_probs, flag_anomalies, group_filter, gpd_tail_probs
from .utils import parallel_map

MORTALITY_COLUMNS = ("year", "age", "sex", "mortality_rate")


def load_mortality_csv(path) -> pd.DataFrame:
    """Read and validate a year/age/sex/rate table.

    Accepts ``mortality_rate`` or ``rate`` for the rate column. Raises with
    the list of gaps if any (sex, age) series misses a year of the file's
    year range.
    """
    df = pd.read_csv(path)
    if "rate" in df.columns and "mortality_rate" not in df.columns:
        df = df.rename(columns={"rate": "mortality_rate"})
    missing_cols = [c for c in MORTALITY_COLUMNS if c not in df.columns]
    if missing_cols:
        raise ValidationError(f"mortality CSV is missing columns: {', '.join(missing_cols)}")
    df = df[list(MORTALITY_COLUMNS)].copy()
    if df["mortality_rate"].isna().any() or (df["mortality_rate"] <= 0).any():
        bad = df.index[df["mortality_rate"].isna() | (df["mortality_rate"] <= 0)][:5].tolist()
        raise ValidationError(f"mortality rates must be positive; bad rows at index {bad}")

    years = np.arange(df["year"].min(), df["year"].max() + 1)
    gaps = []
    for (sex, age), grp in df.groupby(["sex", "age"]):
        have = set(grp["year"])
        for y in years:
            if y not in have:
                gaps.append((sex, int(age), int(y)))
    if gaps:
        shown = ", ".join(f"{s}/{a}/{y}" for s, a, y in gaps[:10])
        raise ValidationError(
            f"mortality grid has {len(gaps)} missing cells (sex/age/year): {shown}"
            + ("..." if len(gaps) > 10 else "")
        )
    return df.sort_values(["sex", "age", "year"]).reset_index(drop=True)


@dataclass
class MortalityResult:
    table: pd.DataFrame
    fits: dict
    n_flagged_raw: int
    n_flagged: int


def mortality_anomalies(
    df: pd.DataFrame,
    h: int = 10,
    alpha: float = 0.01,
    beta: float = 0.1,
    min_count: int = 3,
    log_rates: bool = True,
    pooling: str = "sex",
) -> MortalityResult:
    """Run the mortality pipeline and return the scored table.

    ``pooling`` chooses the tail-fit sample: "sex" (one fit per sex,
    default) or "all" (one pooled fit).
    """
    if pooling not in ("sex", "all"):
        raise ValidationError(f"pooling must be 'sex' or 'all', got {pooling!r}")
    df = df.sort_values(["sex", "age", "year"]).reset_index(drop=True)
    values = np.log(df["mortality_rate"].to_numpy()) if log_rates else df["mortality_rate"].to_numpy()

    surprisals = np.empty(len(df))
    groups = list(df.groupby(["sex", "age"]).indices.items())

    def one_series(item):
        (sex, age), idx = item
        series = hampel_series(values[idx], h)
        return idx, series.surprisals

    for idx, s in parallel_map(one_series, groups):
        surprisals[idx] = s

    probs = np.empty(len(df))
    fits: dict = {}
    if pooling == "sex":
        for sex, idx in df.groupby("sex").indices.items():
            estimate = gpd_tail_probs(surprisals[idx], beta=beta)
            probs[idx] = estimate.probs
            fits[sex] = estimate.params["fit"]
    else:
        estimate = gpd_tail_probs(surprisals, beta=beta)
        probs[:] = estimate.probs
        fits["all"] = estimate.params["fit"]

    from .scoring import TailEstimate

    estimate_all = TailEstimate(probs=probs, method="gpd", params={"beta": beta})
    report = flag_anomalies(estimate_all, alpha)
    keys = list(zip(df["year"].to_numpy(), df["sex"].to_numpy()))
    filtered = group_filter(report, keys, min_count)

    flagged_raw = np.zeros(len(df), dtype=bool)
    flagged_raw[report.flagged] = True
    flagged = np.zeros(len(df), dtype=bool)
    flagged[filtered.flagged] = True

    table = df.copy()
    table["surprisal"] = surprisals
    table["p"] = probs
    table["flagged_raw"] = flagged_raw
    table["flagged"] = flagged
    return MortalityResult(
        table=table,
        fits=fits,
        n_flagged_raw=int(flagged_raw.sum()),
        n_flagged=int(flagged.sum()),
    )


CRICKET_COLUMNS = ("player", "innings", "notouts")


def load_cricket_csv(path) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in CRICKET_COLUMNS if c not in df.columns]
    if missing:
        raise ValidationError(f"cricket CSV is missing columns: {', '.join(missing)}")
    df = df[list(CRICKET_COLUMNS)].copy()
    if (df["notouts"] > df["innings"]).any():
        bad = df.index[df["notouts"] > df["innings"]][:5].tolist()
        raise ValidationError(f"notouts exceed innings at rows {bad}")
    return df


@dataclass
class CricketResult:
    table: pd.DataFrame
    fit: BinomialSmoothFit
    tail_fit: GpdFit | None
    pooled_proportion: float


def cricket_anomalies(
    df: pd.DataFrame,
    beta: float = 0.1,
    alpha: float = 0.01,
    estimator: str = "gpd",
) -> CricketResult:
    """Rank batters by how surprising their not-out count is.

    Returns the table sorted by anomaly probability ascending (most
    anomalous first) with a 1-based rank column.
    """
    if estimator not in ("gpd", "empirical"):
        raise ValidationError(f"cricket estimator must be 'gpd' or 'empirical', got {estimator!r}")
    innings = df["innings"].to_numpy()
    notouts = df["notouts"].to_numpy()
    fit = fit_binomial_smooth(innings, notouts)
    sample = binomial_surprisals(fit, innings, notouts)
    tail_fit = None
    if estimator == "gpd":
        estimate = gpd_tail_probs(sample.surprisals, beta=beta)
        tail_fit = estimate.params["fit"]
    else:
        estimate = empirical_tail_probs(sample.surprisals)

    table = df.copy()
    table["fitted_prob"] = fit.fitted_prob(innings)
    table["surprisal"] = sample.surprisals
    table["p"] = estimate.probs
    table["flagged"] = estimate.probs < alpha
    table = table.sort_values(
        ["p", "surprisal"], ascending=[True, False], kind="mergesort"
    ).reset_index(drop=True)
    table["rank"] = np.arange(1, len(table) + 1)
    pooled = float(notouts.sum() / innings.sum())
    return CricketResult(table=table, fit=fit, tail_fit=tail_fit, pooled_proportion=pooled)
