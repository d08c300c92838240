"""Empirical estimator of surprisal tail probabilities.

The tail probability of a surprisal value s is the proportion of observed
surprisals at least as large as s. Ties count inclusively, which keeps the
estimator conservative for discrete surprisal distributions, and queries
outside the observed range follow the literal proportion definition
(above the maximum -> 0, below the minimum -> 1).

``dkw_epsilon`` gives the half-width of the finite-sample uniform
confidence band for the underlying surprisal CDF, and
``band_coverage_check`` verifies that band's coverage by simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DistributionModel, log_density_array, sample_array
from .errors import ValidationError


@dataclass(frozen=True)
class EcdfTail:
    """Sorted surprisal sample backing the empirical tail estimator."""

    sorted_surprisals: np.ndarray
    n: int

    @classmethod
    def from_values(cls, values) -> "EcdfTail":
        arr = np.sort(np.asarray(values, dtype=float))
        if arr.size == 0:
            raise ValidationError("empirical tail needs at least one surprisal")
        if np.any(np.isnan(arr)):
            raise ValidationError("surprisals contain NaN")
        return cls(sorted_surprisals=arr, n=int(arr.size))


@dataclass(frozen=True)
class DkwBand:
    """Uniform confidence band half-width for an empirical CDF of size n."""

    epsilon: float
    alpha: float
    n: int


def empirical_tail_prob(tail: EcdfTail, s) -> float | np.ndarray:
    """Proportion of observed surprisals at least as large as s.

    Vectorized over s. An observed surprisal counts itself, so the sample
    maximum maps to 1/n (when unique) and any query above it maps to 0.
    """
    idx = np.searchsorted(tail.sorted_surprisals, s, side="left")
    out = (tail.n - idx) / tail.n
    return float(out) if np.ndim(s) == 0 else out


def dkw_epsilon(n: int, alpha: float) -> float:
    """Band half-width sqrt(log(2/alpha) / (2n))."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0,1), got {alpha}")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def dkw_band(n: int, alpha: float) -> DkwBand:
    return DkwBand(epsilon=dkw_epsilon(n, alpha), alpha=alpha, n=n)


def sup_ecdf_distance(sample: np.ndarray, reference_sorted: np.ndarray) -> float:
    """sup over s of |ECDF_sample(s) - G(s)| with G the reference step CDF.

    The supremum over the real line is attained at the sample's jump
    points, evaluating G from both sides so reference atoms are handled.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    m = reference_sorted.size
    g_right = np.searchsorted(reference_sorted, x, side="right") / m
    g_left = np.searchsorted(reference_sorted, x, side="left") / m
    grid = np.arange(1, n + 1) / n
    d_plus = np.max(grid - g_right)
    d_minus = np.max(g_left - (grid - 1.0 / n))
    return float(max(d_plus, d_minus, 0.0))


def band_coverage_check(
    model: DistributionModel,
    n: int,
    alpha: float,
    reps: int,
    seed: int,
    oracle_draws: int = 1_000_000,
) -> float:
    """Fraction of replications whose empirical surprisal CDF stays inside the band.

    The true surprisal CDF is approximated by a large-sample oracle
    (``oracle_draws`` draws from the model). Each replication draws n fresh
    observations, computes their surprisals, and checks
    sup_s |ECDF_n(s) - G(s)| <= epsilon.
    """
    if reps < 100:
        raise ValidationError(f"reps must be >= 100, got {reps}")
    eps = dkw_epsilon(n, alpha)
    master = np.random.SeedSequence(seed)
    oracle_seq, rep_seq = master.spawn(2)

    oracle_rng = np.random.default_rng(oracle_seq)
    oracle_obs = sample_array(model, oracle_draws, oracle_rng)
    oracle_surprisals = np.sort(-log_density_array(model, oracle_obs))

    rng = np.random.default_rng(rep_seq)
    inside = 0
    for _ in range(reps):
        obs = sample_array(model, n, rng)
        s = -log_density_array(model, obs)
        if sup_ecdf_distance(s, oracle_surprisals) <= eps:
            inside += 1
    return inside / reps
