"""Conditional-distribution surprisal pipelines.

Two conditional models are provided:

* a rolling-window Normal whose center is the windowed median and whose
  scale is the windowed MAD rescaled by 1/Phi^-1(0.75) -- scoring against
  it reproduces the classical median/MAD time-series outlier rule;
* a Binomial success-probability smooth in the number of trials, fit by
  unpenalized IRLS on a natural cubic spline basis in log(trials), used
  for the proportion-of-not-outs application.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .distributions import LOG_2PI, normal_cdf, normal_quantile
from .errors import FitError, ValidationError
from .scoring import SurprisalSample, TailEstimate


@dataclass(frozen=True)
class HampelModel:
    """Configuration for the rolling median/MAD conditional Normal."""

    half_window_h: int
    min_scale: float = 0.0

    def __post_init__(self):
        if self.half_window_h < 1:
            raise ValidationError(f"half window must be >= 1, got {self.half_window_h}")
        if self.min_scale < 0:
            raise ValidationError(f"min_scale must be >= 0, got {self.min_scale}")


@dataclass(frozen=True)
class HampelSeries:
    """Per-point window statistics of one series."""

    values: np.ndarray
    medians: np.ndarray
    mads: np.ndarray
    sigmas: np.ndarray
    half_window_h: int
    min_scale: float

    @property
    def surprisals(self) -> np.ndarray:
        z = (self.values - self.medians) / self.sigmas
        return 0.5 * LOG_2PI + np.log(self.sigmas) + 0.5 * z * z


def default_min_scale(y) -> float:
    """1e-8 times the whole-series MAD, guarding locally constant windows."""
    arr = np.asarray(y, dtype=float)
    return 1e-8 * float(np.median(np.abs(arr - np.median(arr))))


def hampel_series(y, h: int, min_scale: float | None = None) -> HampelSeries:
    """Windowed median, MAD, and Normal scale for every point of a series.

    Windows are [t-h, t+h] including the point itself, truncated at the
    series ends. The Normal scale is max(MAD, min_scale) / Phi^-1(0.75).
    """
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"series must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("series contains non-finite values")
    n = arr.size
    if n < 2 * h + 1:
        raise ValidationError(f"series of length {n} is shorter than the window 2*{h}+1")
    if min_scale is None:
        min_scale = default_min_scale(arr)

    medians = np.empty(n)
    mads = np.empty(n)
    for t in range(n):
        window = arr[max(0, t - h):min(n, t + h + 1)]
        m = np.median(window)
        medians[t] = m
        mads[t] = np.median(np.abs(window - m))
    scale = np.maximum(mads, min_scale)
    if np.any(scale == 0.0):
        bad = int(np.flatnonzero(scale == 0.0)[0])
        raise ValidationError(
            f"window around index {bad} is constant (MAD 0) and min_scale is 0; "
            "pass a positive min_scale"
        )
    sigmas = scale / normal_quantile(0.75)
    return HampelSeries(
        values=arr,
        medians=medians,
        mads=mads,
        sigmas=sigmas,
        half_window_h=h,
        min_scale=float(min_scale),
    )


def hampel_surprisals(y, h: int, min_scale: float | None = None) -> SurprisalSample:
    """Surprisals of a series under its rolling conditional Normal."""
    series = hampel_series(y, h, min_scale=min_scale)
    return SurprisalSample(
        observations=series.values,
        surprisals=series.surprisals,
        model_description=f"hampel(h={h})",
    )


def hampel_assumed_probs(series: HampelSeries) -> TailEstimate:
    """Two-sided Normal tail probability of each point in its own window."""
    z = np.abs(series.values - series.medians) / series.sigmas
    probs = 2.0 * (1.0 - normal_cdf(z))
    return TailEstimate(probs=probs, method="assumed", params={"h": series.half_window_h})


def hampel_alpha_from_tau(tau: float) -> float:
    """False-anomaly rate of the classical rule |y - median| > tau * MAD."""
    if not tau > 0:
        raise ValidationError(f"tau must be > 0, got {tau}")
    return 2.0 * (1.0 - float(normal_cdf(tau * normal_quantile(0.75))))


def hampel_tau_from_alpha(alpha: float) -> float:
    """Inverse of ``hampel_alpha_from_tau``."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0,1), got {alpha}")
    return normal_quantile(1.0 - alpha / 2.0) / normal_quantile(0.75)


# --- binomial spline smooth ---------------------------------------------------


@dataclass(frozen=True)
class BinomialSmoothFit:
    """Fitted logit-scale natural cubic spline in log(trials)."""

    knots: np.ndarray
    coefficients: np.ndarray
    deviance: float
    n_obs: int

    def fitted_prob(self, trials) -> float | np.ndarray:
        """Success probability at any positive trial count (extrapolates linearly
        on the logit/log-trials scale beyond the boundary knots)."""
        arr = np.asarray(trials, dtype=float)
        if np.any(arr < 1):
            raise ValidationError("trial counts must be >= 1")
        basis = _natural_spline_basis(np.log(np.atleast_1d(arr)), self.knots)
        eta = basis @ self.coefficients
        out = special.expit(eta)
        return float(out[0]) if np.ndim(trials) == 0 else out


def _natural_spline_basis(x: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Natural cubic spline basis: [1, x, curvature terms], linear beyond
    the boundary knots."""
    cols = [np.ones_like(x), x]
    k = np.asarray(knots, dtype=float)
    if k.size >= 3:
        def d(j):
            return (
                np.maximum(x - k[j], 0.0) ** 3 - np.maximum(x - k[-1], 0.0) ** 3
            ) / (k[-1] - k[j])

        d_last = d(k.size - 2)
        for j in range(k.size - 2):
            cols.append(d(j) - d_last)
    return np.column_stack(cols)


def _binomial_deviance(y, n, p) -> float:
    mu = n * p
    dev = special.xlogy(y, y) - special.xlogy(y, mu)
    dev = dev + special.xlogy(n - y, n - y) - special.xlogy(n - y, n - mu)
    return 2.0 * float(np.sum(dev))


def fit_binomial_smooth(
    innings,
    notouts,
    quantiles=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    max_iter: int = 100,
    tol: float = 1e-10,
) -> BinomialSmoothFit:
    """Binomial MLE of a smooth success curve in the trial count.

    The linear predictor is a natural cubic spline in log(trials) with
    knots at the given quantiles of log(trials); coefficients come from
    iteratively reweighted least squares. Raises FitError with the
    iteration trace on separation or non-convergence.
    """
    n = np.asarray(innings, dtype=float)
    y = np.asarray(notouts, dtype=float)
    if n.shape != y.shape or n.ndim != 1:
        raise ValidationError("innings and notouts must be equal-length vectors")
    if n.size < 50:
        raise ValidationError(f"need at least 50 records to fit the smooth, got {n.size}")
    if np.any(n < 1) or np.any(n != np.floor(n)):
        raise ValidationError("innings must be integers >= 1")
    if np.any(y < 0) or np.any(y > n) or np.any(y != np.floor(y)):
        raise ValidationError("notouts must be integers in [0, innings]")

    x = np.log(n)
    knots = np.unique(np.quantile(x, quantiles))
    basis = _natural_spline_basis(x, knots)

    p = (y + 0.5) / (n + 1.0)
    eta = special.logit(p)
    deviance = _binomial_deviance(y, n, p)
    trace = [deviance]
    for _ in range(max_iter):
        w = np.maximum(n * p * (1.0 - p), 1e-10)
        z = eta + (y - n * p) / w
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(sw[:, None] * basis, sw * z, rcond=None)
        eta = basis @ coef
        if np.max(np.abs(eta)) > 30.0:
            raise FitError(
                "binomial smooth shows separation (fitted logits diverged)",
                diagnostics={"deviance_trace": trace},
            )
        p = special.expit(eta)
        new_deviance = _binomial_deviance(y, n, p)
        trace.append(new_deviance)
        if abs(new_deviance - deviance) < tol * (abs(new_deviance) + 0.1):
            return BinomialSmoothFit(
                knots=knots, coefficients=coef, deviance=new_deviance, n_obs=int(n.size)
            )
        deviance = new_deviance
    raise FitError(
        f"binomial smooth did not converge in {max_iter} iterations",
        diagnostics={"deviance_trace": trace},
    )


def binomial_surprisals(fit: BinomialSmoothFit, innings, notouts) -> SurprisalSample:
    """Surprisals of (trials, successes) rows under the fitted smooth."""
    n = np.asarray(innings, dtype=float)
    y = np.asarray(notouts, dtype=float)
    if np.any(y < 0) or np.any(y > n):
        raise ValidationError("notouts must lie in [0, innings]")
    p = fit.fitted_prob(n)
    logpmf = (
        special.gammaln(n + 1.0)
        - special.gammaln(y + 1.0)
        - special.gammaln(n - y + 1.0)
        + special.xlogy(y, p)
        + special.xlogy(n - y, 1.0 - p)
    )
    return SurprisalSample(
        observations=np.column_stack([n, y]),
        surprisals=-logpmf,
        model_description="binomial-smooth(logit~ns(log innings))",
    )
