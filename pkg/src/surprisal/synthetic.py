"""Synthetic fixtures shaped like the two application datasets.

The mortality fixture is a complete year/age/sex grid with a smooth
baseline surface, iid log-scale noise, planted multi-age shocks in a few
years (which the pipeline should recover), and isolated one-age blips
(which the group filter should drop). The cricket fixture is a batter
table with a known smooth not-out curve and one planted extreme veteran
row that must rank first.

Run ``python -m surprisal.synthetic <outdir>`` to write both CSVs.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pandas as pd

MORTALITY_YEARS = (1816, 1999)
MORTALITY_AGES = (0, 85)

# (sex, years, ages, log-rate bump) -- multi-age shocks the pipeline must find
MORTALITY_WAVES = (
    ("male", range(1914, 1919), range(19, 41), 0.85),
    ("male", range(1940, 1941), range(19, 46), 0.80),
    ("male", range(1832, 1833), range(2, 61), 0.45),
    ("female", range(1832, 1833), range(2, 61), 0.45),
    ("female", range(1871, 1872), range(30, 33), 0.70),
)

# single-age blips the group filter must remove
MORTALITY_BLIPS = (
    ("female", 1900, 33, 0.80),
    ("male", 1875, 60, 0.80),
)


def _baseline_log_rate(age: np.ndarray, year: np.ndarray, male: np.ndarray) -> np.ndarray:
    infant = 0.15 * np.exp(-0.45 * age)
    background = 0.0015
    senescent = 0.0002 * np.exp(0.08 * age)
    level = np.log(infant + background + senescent)
    improvement = 0.004 * (year - MORTALITY_YEARS[0]) + 0.012 * np.maximum(0, year - 1950)
    return level - improvement + 0.15 * male


def synthetic_mortality(seed: int = 0, noise_sd: float = 0.06) -> pd.DataFrame:
    """Complete (year, age, sex) grid of synthetic rates with planted anomalies."""
    rng = np.random.default_rng(seed)
    years = np.arange(MORTALITY_YEARS[0], MORTALITY_YEARS[1] + 1)
    ages = np.arange(MORTALITY_AGES[0], MORTALITY_AGES[1] + 1)
    sexes = ("female", "male")

    grid = pd.MultiIndex.from_product(
        [sexes, ages, years], names=["sex", "age", "year"]
    ).to_frame(index=False)
    male = (grid["sex"] == "male").to_numpy().astype(float)
    log_rate = _baseline_log_rate(
        grid["age"].to_numpy(float), grid["year"].to_numpy(float), male
    )
    log_rate = log_rate + rng.normal(0.0, noise_sd, size=len(grid))

    for sex, wave_years, wave_ages, bump in MORTALITY_WAVES:
        mask = (
            (grid["sex"] == sex)
            & grid["year"].isin(list(wave_years))
            & grid["age"].isin(list(wave_ages))
        )
        log_rate[mask.to_numpy()] += bump
    for sex, year, age, bump in MORTALITY_BLIPS:
        mask = (grid["sex"] == sex) & (grid["year"] == year) & (grid["age"] == age)
        log_rate[mask.to_numpy()] += bump

    out = grid.copy()
    out["mortality_rate"] = np.exp(log_rate)
    return out[["year", "age", "sex", "mortality_rate"]].sort_values(
        ["sex", "age", "year"]
    ).reset_index(drop=True)


CRICKET_PLANTED = {"player": "b9999", "innings": 265, "notouts": 114}


def true_notout_curve(innings) -> np.ndarray:
    """Generator-truth probability of a not-out as a function of innings."""
    x = np.log(np.asarray(innings, dtype=float))
    logit = -0.708 - 0.682 * x + 0.0888 * x * x
    return 1.0 / (1.0 + np.exp(-logit))


def synthetic_cricket(
    seed: int = 0, n_batters: int = 3000, n_veterans: int = 120
) -> pd.DataFrame:
    """Batter table with a smooth not-out curve and one planted extreme row."""
    rng = np.random.default_rng(seed)
    short = np.exp(rng.normal(2.2, 1.3, size=n_batters))
    innings = np.clip(np.round(short), 1, 320).astype(int)
    veterans = np.round(rng.uniform(150, 320, size=n_veterans)).astype(int)
    innings = np.concatenate([innings, veterans])
    probs = true_notout_curve(innings)
    notouts = rng.binomial(innings, probs)
    df = pd.DataFrame(
        {
            "player": [f"b{i:04d}" for i in range(len(innings))],
            "innings": innings,
            "notouts": notouts,
        }
    )
    planted = pd.DataFrame([CRICKET_PLANTED])
    return pd.concat([df, planted], ignore_index=True)


def write_fixtures(outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    mort = outdir / "mortality_synthetic.csv"
    synthetic_mortality().to_csv(mort, index=False)
    paths.append(mort)
    cricket = outdir / "cricket_synthetic.csv"
    synthetic_cricket().to_csv(cricket, index=False)
    paths.append(cricket)
    return paths


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "data"
    for p in write_fixtures(target):
        print(p)
