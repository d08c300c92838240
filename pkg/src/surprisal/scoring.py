"""Surprisal computation, anomaly probabilities, and flagging.

The anomaly probability of an observation is the chance of seeing a
surprisal at least as large as its own. Three estimators are provided:
``assumed`` (computed from the model itself), ``empirical`` (proportion of
observed surprisals at least as large), and ``gpd`` (peaks-over-threshold
fit to the largest-beta fraction).

Observations with infinite surprisal (zero density under the model) are
impossible under the model and receive probability 0 from every
estimator, so they are flagged at any alpha > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from . import distributions as dist
from .distributions import DistributionModel, log_density_array
from .empirical import EcdfTail, empirical_tail_prob
from .errors import ArityError, ValidationError
from .gpd import GpdFit, fit_gpd, gpd_tail_prob, select_threshold

METHODS = ("assumed", "empirical", "gpd")


@dataclass(frozen=True)
class SurprisalSample:
    """Observations with their surprisals under one model."""

    observations: np.ndarray
    surprisals: np.ndarray
    model_description: str

    def __post_init__(self):
        if len(self.observations) != len(self.surprisals):
            raise ValidationError("observations and surprisals differ in length")
        if len(self.surprisals) == 0:
            raise ValidationError("a surprisal sample needs at least one observation")

    def __len__(self) -> int:
        return len(self.surprisals)


@dataclass(frozen=True)
class TailEstimate:
    """Per-observation anomaly probabilities plus estimator metadata."""

    probs: np.ndarray
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        p = np.asarray(self.probs, dtype=float)
        if p.size and (np.nanmin(p) < 0.0 or np.nanmax(p) > 1.0):
            raise ValidationError("anomaly probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class AnomalyReport:
    """Indices flagged at level alpha, with optional group-filter metadata."""

    flagged: np.ndarray
    alpha: float
    group_filter: dict | None = None


def compute_surprisals(model: DistributionModel, data) -> SurprisalSample:
    """Negated log generalized density of each observation.

    Zero-density points yield +inf, which downstream estimators accept.
    """
    arr = np.asarray(data)
    if arr.size == 0:
        raise ValidationError("data must be nonempty")
    s = -log_density_array(model, arr)
    return SurprisalSample(observations=arr, surprisals=s, model_description=model.describe())


def _two_sided_symmetric(model, y):
    """p = 2(1 - F(|y - loc| / scale)) for symmetric unimodal scalar models."""
    if isinstance(model, dist.Normal):
        z = np.abs((y - model.mu) / model.sigma)
        return 2.0 * (1.0 - dist.normal_cdf(z))
    from scipy import stats

    z = np.abs((y - model.loc) / model.scale)
    return 2.0 * stats.t.sf(z, df=model.nu)


def _gamma_density_level_prob(model: dist.Gamma, y: np.ndarray) -> np.ndarray:
    """Pr(f(Y) <= f(y)) for a Gamma model via its density level sets."""
    from scipy import stats

    a, r = model.shape, model.rate
    cdf = lambda x: stats.gamma.cdf(x, a=a, scale=1.0 / r)
    out = np.empty(y.shape)
    if a <= 1.0:
        # density is decreasing on the support, so the level set is [y, inf)
        out[:] = 1.0 - cdf(np.maximum(y, 0.0))
        out[y < 0] = 0.0
        return out
    mode = (a - 1.0) / r
    logpdf = lambda x: dist.log_density(model, x)
    for i, yi in enumerate(y):
        if yi <= 0.0:
            out[i] = 0.0
            continue
        level = logpdf(yi)
        if yi == mode:
            out[i] = 1.0
        elif yi < mode:
            hi = 2.0 * mode - yi
            while logpdf(hi) > level:
                hi = mode + 2.0 * (hi - mode)
            other = optimize.brentq(lambda x: logpdf(x) - level, mode, hi, xtol=1e-12)
            out[i] = cdf(yi) + 1.0 - cdf(other)
        else:
            lo = mode / 2.0
            while logpdf(lo) > level:
                lo /= 2.0
            other = optimize.brentq(lambda x: logpdf(x) - level, lo, mode, xtol=1e-12)
            out[i] = cdf(other) + 1.0 - cdf(yi)
    return np.clip(out, 0.0, 1.0)


def _binomial_density_level_prob(model: dist.Binomial, y) -> np.ndarray:
    """Exact Pr(pmf(K) <= pmf(k)) by summing over the support."""
    support = np.arange(model.trials + 1)
    logpmf = log_density_array(model, support)
    pmf = np.exp(logpmf)
    obs_logpmf = log_density_array(model, y)
    out = np.empty(len(obs_logpmf))
    for i, li in enumerate(obs_logpmf):
        if li == -np.inf:
            out[i] = 0.0
        else:
            out[i] = pmf[logpmf <= li + 1e-9].sum()
    return np.clip(out, 0.0, 1.0)


def assumed_tail_probs(
    model: DistributionModel,
    data,
    mc_draws: int = 200_000,
    mc_seed: int = 0,
) -> TailEstimate:
    """Anomaly probabilities computed from the assumed model itself.

    Closed forms cover the symmetric scalar models; Gamma uses numeric
    density level sets and Binomial an exact support sum. Product models
    fall back to a seeded Monte Carlo approximation of the surprisal
    distribution (``mc_draws`` draws).
    """
    arr = np.asarray(data)
    params: dict = {"model": model.describe()}
    if isinstance(model, (dist.Normal, dist.StudentT)):
        probs = _two_sided_symmetric(model, arr.astype(float))
    elif isinstance(model, dist.Gamma):
        probs = _gamma_density_level_prob(model, arr.astype(float))
    elif isinstance(model, dist.Binomial):
        probs = _binomial_density_level_prob(model, arr)
    elif isinstance(model, dist.IndependentProduct):
        rng = np.random.default_rng(mc_seed)
        ref = -log_density_array(model, dist.sample_array(model, mc_draws, rng))
        tail = EcdfTail.from_values(ref)
        s = -log_density_array(model, arr)
        probs = np.where(np.isinf(s), 0.0, empirical_tail_prob(tail, s))
        params.update({"mc_draws": mc_draws, "mc_seed": mc_seed})
    else:
        raise ArityError(f"no assumed-tail rule for model {model.describe()}")
    return TailEstimate(probs=np.asarray(probs, dtype=float), method="assumed", params=params)


def empirical_tail_probs(surprisals) -> TailEstimate:
    """Empirical anomaly probabilities of a surprisal sample against itself.

    Each observation counts itself, so the largest surprisal gets 1/n.
    Infinite surprisals get 0.
    """
    s = np.asarray(surprisals, dtype=float)
    tail = EcdfTail.from_values(s)
    probs = empirical_tail_prob(tail, s)
    probs = np.where(np.isinf(s), 0.0, probs)
    return TailEstimate(probs=probs, method="empirical", params={"n": int(s.size)})


def gpd_tail_probs(surprisals, beta: float = 0.1) -> TailEstimate:
    """Peaks-over-threshold anomaly probabilities of a surprisal sample.

    The fit uses the finite surprisals; infinite ones get probability 0.
    The fitted tail is available under ``params["fit"]``.
    """
    s = np.asarray(surprisals, dtype=float)
    finite = np.isfinite(s)
    u, exceedances = select_threshold(s[finite], beta)
    fit = fit_gpd(exceedances, beta=beta, threshold_u=u)
    probs = np.zeros(s.shape)
    probs[finite] = gpd_tail_prob(fit, s[finite])
    params = {"beta": beta, "fit": fit, "n_infinite": int(np.sum(~finite))}
    return TailEstimate(probs=probs, method="gpd", params=params)


def tail_probs(
    sample: SurprisalSample,
    method: str,
    model: DistributionModel | None = None,
    beta: float = 0.1,
    mc_seed: int = 0,
) -> TailEstimate:
    """Dispatch to one of the three estimators by name."""
    if method == "assumed":
        if model is None:
            raise ValidationError("the assumed estimator needs the model")
        return assumed_tail_probs(model, sample.observations, mc_seed=mc_seed)
    if method == "empirical":
        return empirical_tail_probs(sample.surprisals)
    if method == "gpd":
        return gpd_tail_probs(sample.surprisals, beta=beta)
    raise ValidationError(f"unknown estimator {method!r}; expected one of {METHODS}")


def flag_anomalies(estimate: TailEstimate, alpha: float) -> AnomalyReport:
    """Indices with p strictly below alpha; ties at alpha are not flagged."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0,1), got {alpha}")
    flagged = np.flatnonzero(np.asarray(estimate.probs) < alpha)
    return AnomalyReport(flagged=flagged, alpha=alpha)


def group_filter(report: AnomalyReport, group_of, min_count: int) -> AnomalyReport:
    """Keep a flag only if its group holds at least min_count flagged indices.

    ``group_of`` is either a callable from index to group key or a sequence
    of keys indexed by observation. Filtering never adds flags.
    """
    if min_count < 1:
        raise ValidationError(f"min_count must be >= 1, got {min_count}")
    if callable(group_of):
        keys = [group_of(int(i)) for i in report.flagged]
    else:
        keys = [group_of[int(i)] for i in report.flagged]
    counts: dict = {}
    for k in keys:
        counts[k] = counts.get(k, 0) + 1
    kept = np.array(
        [i for i, k in zip(report.flagged, keys) if counts[k] >= min_count],
        dtype=int,
    )
    meta = {"min_count": int(min_count), "flagged_per_group": counts}
    return replace(report, flagged=kept, group_filter=meta)
