"""Monte-Carlo checks of the maximum-surprisal tail bounds.

For a model whose surprisal is sub-Gaussian, sub-exponential, or has a
polynomial moment, the sample maximum of n surprisals obeys explicit
one-sided tail bounds (reversed-Weibull, Gumbel, and Frechet regimes
respectively). This module simulates replicated maxima and asserts
``empirical exceedance frequency <= bound + 3 binomial standard errors``
at each grid point -- the bounds are one-sided, so equality is never
asserted. Regime constants are supplied per study; seeded draw-based
oracles for them live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DistributionModel, log_density_array, sample_array
from .errors import ValidationError
from .utils import parallel_chunks

BOUND_KINDS = ("subgaussian", "subexponential", "polynomial")


@dataclass(frozen=True)
class MaxSurprisalStudy:
    """One simulation design: model, sample size, and regime constants."""

    model: DistributionModel
    n: int
    reps: int
    entropy_ES: float
    nu: float = 0.0
    b: float = 0.0
    C: float = 0.0
    p_order: float = 1.0

    def __post_init__(self):
        if self.reps < 500:
            raise ValidationError(f"reps must be >= 500, got {self.reps}")
        if self.n < 1:
            raise ValidationError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class BoundCheck:
    """Result of one grid point of a tail-bound check."""

    s: float
    empirical_prob: float
    bound: float
    slack: float
    passed: bool


def _surprisal_draws(model: DistributionModel, shape, rng) -> np.ndarray:
    shape_t = (shape,) if np.isscalar(shape) else tuple(shape)
    obs = sample_array(model, shape_t, rng)
    if obs.ndim == len(shape_t) + 1:
        flat = obs.reshape(-1, obs.shape[-1])
    else:
        flat = obs.reshape(-1)
    return (-log_density_array(model, flat)).reshape(shape_t)


def entropy_oracle(model: DistributionModel, seed: int, draws: int = 1_000_000) -> float:
    """Mean surprisal (entropy) estimated from a large seeded sample."""
    rng = np.random.default_rng(seed)
    return float(np.mean(_surprisal_draws(model, draws, rng)))


def subgaussian_norm_oracle(
    model: DistributionModel,
    seed: int,
    draws: int = 1_000_000,
    lambdas=None,
) -> float:
    """Sub-Gaussian norm from an empirical MGF grid.

    Returns the smallest nu whose envelope exp(lambda^2 nu^2 / 2) dominates
    the empirical moment generating function of S - E[S] on the grid.
    """
    rng = np.random.default_rng(seed)
    s = _surprisal_draws(model, draws, rng)
    centered = s - np.mean(s)
    if lambdas is None:
        lambdas = np.concatenate([np.linspace(-4.0, -0.1, 25), np.linspace(0.1, 4.0, 25)])
    best = 0.0
    for lam in lambdas:
        arg = lam * centered
        if np.max(arg) > 700.0:
            continue
        log_mgf = math.log(float(np.mean(np.exp(arg))))
        if log_mgf > 0:
            best = max(best, 2.0 * log_mgf / (lam * lam))
    if best == 0.0:
        raise ValidationError("could not bracket a sub-Gaussian norm on the lambda grid")
    return math.sqrt(best)


def subexponential_scale_oracle(
    model: DistributionModel,
    seed: int,
    draws: int = 1_000_000,
    max_top_share: float = 0.05,
):
    """(nu, b) for the sub-exponential envelope via an MGF radius probe.

    The radius 1/b is the largest lambda at which the empirical MGF of
    S - E[S] is still stable (no single draw contributes more than
    ``max_top_share`` of the sum); nu matches the envelope on that range.
    """
    rng = np.random.default_rng(seed)
    s = _surprisal_draws(model, draws, rng)
    centered = s - np.mean(s)
    lam_grid = np.linspace(0.05, 4.0, 80)
    radius = 0.0
    for lam in lam_grid:
        arg = lam * centered
        top = float(np.max(arg))
        if top > 700.0:
            break
        terms = np.exp(arg)
        if math.exp(top) / float(np.sum(terms)) > max_top_share:
            break
        radius = lam
    if radius == 0.0:
        raise ValidationError("empirical MGF is unstable at every probed lambda")
    b = 1.0 / radius
    nu_sq = 0.0
    for lam in np.linspace(0.05, radius, 40):
        for signed in (lam, -lam):
            log_mgf = math.log(float(np.mean(np.exp(signed * centered))))
            if log_mgf > 0:
                nu_sq = max(nu_sq, 2.0 * log_mgf / (signed * signed))
    return math.sqrt(nu_sq), b


def polynomial_moment_oracle(
    model: DistributionModel,
    p_order: float,
    seed: int,
    draws: int = 1_000_000,
) -> float:
    """C = (E|S - E[S]|^p)^(1/p) from a large seeded sample."""
    if p_order < 1:
        raise ValidationError(f"p_order must be >= 1, got {p_order}")
    rng = np.random.default_rng(seed)
    s = _surprisal_draws(model, draws, rng)
    centered = np.abs(s - np.mean(s))
    return float(np.mean(centered ** p_order) ** (1.0 / p_order))


def simulate_max_distribution(study: MaxSurprisalStudy, seed: int) -> np.ndarray:
    """reps independent centered maxima M_n - E[S]."""
    def one_chunk(rep_count, rng):
        s = _surprisal_draws(study.model, (rep_count, study.n), rng)
        return np.max(s, axis=1) - study.entropy_ES

    chunk = max(1, int(2_000_000 // study.n))
    return parallel_chunks(one_chunk, study.reps, chunk, seed)


def _bound_value(study: MaxSurprisalStudy, kind: str, s: float) -> float:
    n = study.n
    if kind == "subgaussian":
        if study.nu <= 0:
            raise ValidationError("subgaussian bound needs nu > 0")
        per = math.exp(-0.5 * s * s / (study.nu ** 2))
    elif kind == "subexponential":
        if study.nu <= 0 or study.b <= 0:
            raise ValidationError("subexponential bound needs nu > 0 and b > 0")
        per = math.exp(-s / (2.0 * study.b))
    elif kind == "polynomial":
        if study.C <= 0:
            raise ValidationError("polynomial bound needs C > 0")
        per = (study.C / s) ** study.p_order
    else:
        raise ValidationError(f"unknown bound kind {kind!r}; expected one of {BOUND_KINDS}")
    per = min(per, 1.0)
    return 1.0 - (1.0 - per) ** n


def _check_domain(study: MaxSurprisalStudy, kind: str, s_grid: np.ndarray):
    if kind == "subgaussian" and np.any(s_grid <= 0):
        raise ValidationError("subgaussian bound requires s > 0")
    if kind == "subexponential":
        if np.any(s_grid <= study.nu ** 2 / study.b):
            raise ValidationError(
                f"subexponential bound requires s > nu^2/b = {study.nu ** 2 / study.b:g}"
            )
    if kind == "polynomial" and np.any(s_grid <= study.C):
        raise ValidationError(f"polynomial bound requires s > C = {study.C:g}")


def check_tail_bound(
    study: MaxSurprisalStudy,
    bound: str,
    s_grid,
    seed: int,
    maxima: np.ndarray | None = None,
) -> list[BoundCheck]:
    """Per-grid-point one-sided comparison of exceedance frequency to the bound.

    The sub-Gaussian and sub-exponential bounds control the upper deviation
    M_n - E[S]; the polynomial bound controls |M_n - E[S]|. Pass a
    precomputed ``maxima`` array to reuse one simulation across checks.
    """
    grid = np.asarray(s_grid, dtype=float)
    _check_domain(study, bound, grid)
    if maxima is None:
        maxima = simulate_max_distribution(study, seed)
    deviations = np.abs(maxima) if bound == "polynomial" else maxima
    out = []
    for s in grid:
        emp = float(np.mean(deviations >= s))
        theory = _bound_value(study, bound, float(s))
        p_ref = min(theory, 1.0)
        slack = 3.0 * math.sqrt(p_ref * (1.0 - p_ref) / study.reps)
        out.append(
            BoundCheck(
                s=float(s),
                empirical_prob=emp,
                bound=theory,
                slack=slack,
                passed=emp <= theory + slack,
            )
        )
    return out


def checks_to_rows(checks: list[BoundCheck]) -> list[dict]:
    """Rows of (s, empirical_prob, bound, pass) for CSV emission."""
    return [
        {
            "s": c.s,
            "empirical_prob": c.empirical_prob,
            "bound": c.bound,
            "pass": c.passed,
        }
        for c in checks
    ]


def default_studies(n: int, reps: int, seed: int):
    """The three standard regime studies with oracle-derived constants.

    Returns (name, study, bound kind, s grid) tuples: a bounded log-pmf
    model for the sub-Gaussian regime, a Normal for the sub-exponential
    regime, and a t(4) for the polynomial regime. Grids respect each
    bound's domain.
    """
    from .distributions import Binomial, Normal, StudentT

    binom = Binomial(10, 0.5)
    es = entropy_oracle(binom, seed)
    nu = subgaussian_norm_oracle(binom, seed + 1)
    sg = MaxSurprisalStudy(binom, n, reps, entropy_ES=es, nu=nu)
    # the last point sits where the bound stops being saturated at 1
    sg_grid = np.array([1.0, 2.0, 4.0, nu * math.sqrt(2.0 * math.log(2.0 * n)) + 0.5])

    normal = Normal(0.0, 1.0)
    es = entropy_oracle(normal, seed + 2)
    nu_se, b = subexponential_scale_oracle(normal, seed + 3)
    se = MaxSurprisalStudy(normal, n, reps, entropy_ES=es, nu=nu_se, b=b)
    se_grid = np.concatenate(
        [nu_se ** 2 / b + np.array([1.0, 2.0, 4.0]), [2.0 * b * (math.log(2.0 * n) + 2.0)]]
    )

    t4 = StudentT(4.0)
    p_order = 4.0
    es = entropy_oracle(t4, seed + 4)
    c = polynomial_moment_oracle(t4, p_order, seed + 5)
    poly = MaxSurprisalStudy(t4, n, reps, entropy_ES=es, C=c, p_order=p_order)
    poly_grid = c * n ** (1.0 / p_order) * np.array([1.5, 2.0, 3.0])

    return [
        ("subgaussian", sg, "subgaussian", sg_grid),
        ("subexponential", se, "subexponential", se_grid),
        ("polynomial", poly, "polynomial", poly_grid),
    ]
