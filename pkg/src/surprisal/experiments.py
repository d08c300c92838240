"""Misspecification experiments.

Two seeded simulation studies quantify how well each tail estimator holds
up when the model used to compute surprisals is wrong:

* the univariate study draws standard Normal (or t(4)) data, scores it
  under both a Normal and a t(4) model, and tabulates tail-probability
  estimates against the truth for observations beyond 2.5;
* the false-rate study draws bivariate independent Gamma(2,2) data,
  scores it under the true model, a moment-matched bivariate Normal, and
  a heavier-tailed t(4) reference, and tracks the realized flag rate at
  alpha = 0.01 across sample sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .distributions import (
    DistributionModel,
    Gamma,
    IndependentProduct,
    Normal,
    StudentT,
    log_density_array,
    sample_array,
)
from .errors import ValidationError
from .gpd import MIN_EXCEEDANCES
from .scoring import assumed_tail_probs, empirical_tail_probs, gpd_tail_probs
from .utils import parallel_map, spawn_rngs

EXPT1_GRID = np.round(np.arange(2.5, 4.5 + 1e-9, 0.1), 10)
EXPT2_N_GRID = (100, 200, 500, 1000, 2000, 5000, 10000)


@dataclass(frozen=True)
class ExperimentConfig:
    true_model: DistributionModel
    assumed_models: tuple
    estimators: tuple
    n_grid: tuple
    alpha: float
    reps: int
    seed: int
    beta: float = 0.1

    def __post_init__(self):
        if self.reps < 1:
            raise ValidationError(f"reps must be >= 1, got {self.reps}")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0,1), got {self.alpha}")


def univariate_truth(name: str) -> DistributionModel:
    if name == "normal":
        return Normal(0.0, 1.0)
    if name == "t4":
        return StudentT(4.0)
    raise ValidationError(f"unknown truth {name!r}; expected 'normal' or 't4'")


def univariate_config(truth: str = "normal", n: int = 1000, reps: int = 200,
                      seed: int = 0, beta: float = 0.1) -> ExperimentConfig:
    return ExperimentConfig(
        true_model=univariate_truth(truth),
        assumed_models=(Normal(0.0, 1.0), StudentT(4.0)),
        estimators=("assumed", "empirical", "gpd"),
        n_grid=(n,),
        alpha=0.01,
        reps=reps,
        seed=seed,
        beta=beta,
    )


def heavier_tail_reference() -> IndependentProduct:
    """Bivariate standard t(4): the heavier-tailed reference model."""
    comp = StudentT(4.0)
    return IndependentProduct((comp, comp))


def false_rate_config(n_grid=EXPT2_N_GRID, reps: int = 1000, alpha: float = 0.01,
                      seed: int = 0, beta: float = 0.1) -> ExperimentConfig:
    truth = IndependentProduct((Gamma(2.0, 2.0), Gamma(2.0, 2.0)))
    normal_ref = IndependentProduct(
        (Normal(1.0, math.sqrt(0.5)), Normal(1.0, math.sqrt(0.5)))
    )
    return ExperimentConfig(
        true_model=truth,
        assumed_models=(truth, normal_ref, heavier_tail_reference()),
        estimators=("empirical", "gpd"),
        n_grid=tuple(n_grid),
        alpha=alpha,
        reps=reps,
        seed=seed,
        beta=beta,
    )


def _nearest_by_abs(data: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Index of the observation whose |y| is closest to each grid value."""
    abs_y = np.abs(data)
    order = np.argsort(abs_y)
    sorted_abs = abs_y[order]
    pos = np.searchsorted(sorted_abs, grid)
    pos = np.clip(pos, 1, sorted_abs.size - 1)
    left_closer = (grid - sorted_abs[pos - 1]) <= (sorted_abs[pos] - grid)
    return order[np.where(left_closer, pos - 1, pos)]


def run_expt_univariate(config: ExperimentConfig, grid=EXPT1_GRID) -> pd.DataFrame:
    """Tail-probability estimates on a |y| grid for every assumed model and estimator.

    The assumed estimator is evaluated directly at the grid points; the
    empirical and GPD estimators are read off the nearest sample
    observation in |y|. ``p_true`` is the two-sided tail under the true model.
    """
    grid = np.asarray(grid, dtype=float)
    n = config.n_grid[0]
    p_true = assumed_tail_probs(config.true_model, grid).probs
    rngs = spawn_rngs(config.seed, config.reps)

    def one_rep(args):
        rep, rng = args
        data = sample_array(config.true_model, n, rng)
        rows = []
        for model in config.assumed_models:
            desc = model.describe()
            s = -log_density_array(model, data)
            near = _nearest_by_abs(data, grid)
            estimates = {}
            if "assumed" in config.estimators:
                estimates["assumed"] = assumed_tail_probs(model, grid).probs
            if "empirical" in config.estimators:
                estimates["empirical"] = empirical_tail_probs(s).probs[near]
            if "gpd" in config.estimators:
                estimates["gpd"] = gpd_tail_probs(s, config.beta).probs[near]
            for estimator, probs in estimates.items():
                for g, p_est, p_tr in zip(grid, probs, p_true):
                    rows.append(
                        {
                            "rep": rep,
                            "y": g,
                            "distribution_used": desc,
                            "estimator": estimator,
                            "p_estimate": float(p_est),
                            "p_true": float(p_tr),
                        }
                    )
        return rows

    all_rows = parallel_map(one_rep, list(enumerate(rngs)))
    return pd.DataFrame([r for rows in all_rows for r in rows])


def summarize_expt1(table: pd.DataFrame) -> pd.DataFrame:
    """Mean estimate per (y, distribution, estimator) across replications."""
    grouped = (
        table.groupby(["y", "distribution_used", "estimator"], as_index=False)
        .agg(p_estimate=("p_estimate", "mean"), p_true=("p_true", "first"))
    )
    return grouped


@dataclass
class FalseRateResult:
    """Per-condition flag rates plus the per-replication empirical identity check."""

    table: pd.DataFrame
    empirical_identity: pd.DataFrame


def run_expt_false_rate(config: ExperimentConfig) -> FalseRateResult:
    """Mean flag rate at each sample size for every assumed model and estimator.

    GPD conditions whose exceedance count would fall below the fit minimum
    (beta * n < 20) are skipped. The result also reports, per sample size,
    the fraction of replications in which the empirical flag set under each
    misspecified model matched the one under the true model exactly.
    """
    truth_desc = config.true_model.describe()
    records = []
    identity_records = []
    for n in config.n_grid:
        gpd_ok = math.ceil(config.beta * n) >= MIN_EXCEEDANCES
        rngs = spawn_rngs(config.seed + n, config.reps)

        def one_rep(rng, n=n, gpd_ok=gpd_ok):
            data = sample_array(config.true_model, n, rng)
            rates = {}
            flag_sets = {}
            for model in config.assumed_models:
                desc = model.describe()
                s = -log_density_array(model, data)
                if "empirical" in config.estimators:
                    probs = empirical_tail_probs(s).probs
                    flags = np.flatnonzero(probs < config.alpha)
                    rates[(desc, "empirical")] = flags.size / n
                    flag_sets[desc] = flags
                if "gpd" in config.estimators and gpd_ok:
                    probs = gpd_tail_probs(s, config.beta).probs
                    rates[(desc, "gpd")] = float(np.mean(probs < config.alpha))
            matches = {
                desc: np.array_equal(flag_sets[desc], flag_sets[truth_desc])
                for desc in flag_sets
                if desc != truth_desc
            }
            return rates, matches

        results = parallel_map(one_rep, rngs)

        for model in config.assumed_models:
            desc = model.describe()
            for estimator in config.estimators:
                vals = [r[(desc, estimator)] for r, _ in results if (desc, estimator) in r]
                if not vals:
                    continue
                rates = np.asarray(vals)
                mean = float(rates.mean())
                se = float(rates.std(ddof=1) / math.sqrt(rates.size)) if rates.size > 1 else 0.0
                records.append(
                    {
                        "n": n,
                        "assumed_model": desc,
                        "estimator": estimator,
                        "mean_flag_rate": mean,
                        "ci_low": mean - 1.96 * se,
                        "ci_high": mean + 1.96 * se,
                        "reps": rates.size,
                    }
                )
        for model in config.assumed_models:
            desc = model.describe()
            if desc == truth_desc:
                continue
            match_vals = [m[desc] for _, m in results if desc in m]
            if match_vals:
                identity_records.append(
                    {
                        "n": n,
                        "assumed_model": desc,
                        "fraction_identical": float(np.mean(match_vals)),
                        "reps": len(match_vals),
                    }
                )
    return FalseRateResult(
        table=pd.DataFrame(records),
        empirical_identity=pd.DataFrame(identity_records),
    )
