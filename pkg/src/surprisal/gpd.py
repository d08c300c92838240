"""Peaks-over-threshold tail estimator.

A Generalized Pareto Distribution is fit by maximum likelihood to the
exceedances of the largest-beta fraction of surprisals over the empirical
(1-beta) quantile. The location parameter is pinned to that threshold.
Tail probabilities follow p = beta * (1 - P(s)) above the threshold and
p = beta at or below it, so the estimate is continuous at the threshold
and can extrapolate beyond the observed maximum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import FitError, ValidationError

MIN_EXCEEDANCES = 20
XI_TOL = 1e-6
_XI_BOUNDS = (-1.0 + 1e-6, 10.0)


@dataclass(frozen=True)
class GpdFit:
    threshold_u: float
    scale_sigma: float
    shape_xi: float
    n_exceed: int
    beta: float
    loglik: float

    def to_dict(self) -> dict:
        return {
            "u": self.threshold_u,
            "sigma": self.scale_sigma,
            "xi": self.shape_xi,
            "n_exceed": self.n_exceed,
            "beta": self.beta,
            "loglik": self.loglik,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def select_threshold(surprisals, beta: float, min_exceedances: int = MIN_EXCEEDANCES):
    """Empirical (1-beta)-quantile threshold and the exceedances above it.

    The threshold is the ceil((1-beta)n)-th smallest surprisal; exceedances
    are s - u for the values strictly above it. ``min_exceedances`` guards
    the downstream fit size; lower it only to inspect the order-statistic
    convention itself.
    """
    s = np.asarray(surprisals, dtype=float)
    n = s.size
    if not 0.0 < beta < 1.0:
        raise ValidationError(f"beta must be in (0,1), got {beta}")
    target = math.ceil(beta * n)
    if target < min_exceedances:
        raise ValidationError(
            f"beta*n gives {target} exceedances; at least {min_exceedances} are required "
            f"to fit the tail (n={n}, beta={beta})"
        )
    s_sorted = np.sort(s)
    u = s_sorted[math.ceil((1.0 - beta) * n) - 1]
    exceedances = s_sorted[s_sorted > u] - u
    if exceedances.size < min_exceedances:
        raise ValidationError(
            f"only {exceedances.size} surprisals exceed the threshold {u:g} "
            f"(ties at the threshold); at least {min_exceedances} are required"
        )
    return float(u), exceedances


def _gpd_nll(phi: float, xi: float, z: np.ndarray) -> float:
    """Negative log-likelihood with sigma = exp(phi).

    Support violations (1 + xi z / sigma <= 0) return a finite penalty that
    grows with the violation so optimizer starts outside the feasible set
    can walk back in.
    """
    sigma = math.exp(phi)
    if abs(xi) <= XI_TOL:
        return z.size * phi + float(np.sum(z)) / sigma
    t = 1.0 + xi * z / sigma
    if np.any(t <= 0.0):
        violation = float(np.sum(np.minimum(t, 0.0) ** 2))
        return 1e8 * (1.0 + violation)
    return z.size * phi + (1.0 + 1.0 / xi) * float(np.sum(np.log(t)))


def _moment_start(z: np.ndarray):
    m, v = float(np.mean(z)), float(np.var(z))
    if v <= 0:
        return None
    xi0 = 0.5 * (1.0 - m * m / v)
    sigma0 = 0.5 * m * (m * m / v + 1.0)
    xi0 = min(max(xi0, _XI_BOUNDS[0] + 0.05), _XI_BOUNDS[1] - 0.05)
    return math.log(max(sigma0, 1e-12)), xi0


def fit_gpd(exceedances, beta: float = float("nan"), threshold_u: float = 0.0) -> GpdFit:
    """Maximum-likelihood GPD fit to nonnegative exceedances.

    Uses a log-scale reparameterization with the shape constrained to
    (-1, 10) and a fixed set of multi-start initializers (moment-based plus
    a shape grid), so the result is deterministic: the best log-likelihood
    wins, ties broken by the smaller shape.
    """
    z = np.asarray(exceedances, dtype=float)
    if z.size < MIN_EXCEEDANCES:
        raise ValidationError(
            f"need at least {MIN_EXCEEDANCES} exceedances to fit, got {z.size}"
        )
    if np.any(z < 0):
        raise ValidationError("exceedances must be nonnegative")
    if not np.all(np.isfinite(z)):
        raise ValidationError("exceedances must be finite")
    if float(np.max(z)) <= 0.0:
        raise FitError("all exceedances are zero; tail is degenerate")
    if float(np.ptp(z)) == 0.0:
        raise FitError("all exceedances are equal; GPD likelihood is unbounded")

    mean_z = float(np.mean(z))
    starts = []
    mstart = _moment_start(z)
    if mstart is not None:
        starts.append(mstart)
    for xi0 in (-0.4, -0.1, 0.2, 0.5, 1.0, 2.0):
        sigma0 = mean_z * (1.0 - xi0) if xi0 < 1.0 else mean_z
        starts.append((math.log(max(sigma0, 1e-12)), xi0))

    results = []
    attempts = []
    for phi0, xi0 in starts:
        res = optimize.minimize(
            lambda p: _gpd_nll(p[0], p[1], z),
            x0=np.array([phi0, xi0]),
            method="L-BFGS-B",
            bounds=[(-100.0, 100.0), _XI_BOUNDS],
        )
        nll = _gpd_nll(res.x[0], res.x[1], z)
        attempts.append({"start": (phi0, xi0), "x": tuple(res.x), "nll": nll, "success": bool(res.success)})
        # 1e7 screens out optima stuck in the support-violation penalty region
        if math.isfinite(nll) and nll < 1e7:
            results.append((nll, res.x[1], res.x[0]))

    if not results:
        raise FitError(
            "GPD fit failed to converge from every start",
            diagnostics={"attempts": attempts},
        )
    nll, xi_hat, phi_hat = min(results, key=lambda r: (r[0], r[1]))
    return GpdFit(
        threshold_u=float(threshold_u),
        scale_sigma=math.exp(phi_hat),
        shape_xi=float(xi_hat),
        n_exceed=int(z.size),
        beta=float(beta),
        loglik=-float(nll),
    )


def fit_gpd_tail(surprisals, beta: float) -> GpdFit:
    """Threshold selection and GPD fit in one step."""
    u, exceedances = select_threshold(surprisals, beta)
    fit = fit_gpd(exceedances, beta=beta, threshold_u=u)
    return fit


def gpd_cdf(fit: GpdFit, s) -> float | np.ndarray:
    """GPD distribution function at s >= threshold."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr < fit.threshold_u):
        raise ValidationError(
            f"gpd_cdf requires s >= threshold {fit.threshold_u:g}; "
            "route sub-threshold points through gpd_tail_prob"
        )
    z = (arr - fit.threshold_u) / fit.scale_sigma
    xi = fit.shape_xi
    if abs(xi) <= XI_TOL:
        out = -np.expm1(-z)
    else:
        t = np.maximum(1.0 + xi * z, 0.0)
        out = 1.0 - t ** (-1.0 / xi)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(s) == 0 else out


def gpd_quantile(fit: GpdFit, p) -> float | np.ndarray:
    """Inverse of ``gpd_cdf`` on (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0.0) or np.any(arr >= 1.0):
        raise ValidationError(f"gpd_quantile requires p in [0,1), got {p}")
    xi = fit.shape_xi
    if abs(xi) <= XI_TOL:
        z = -np.log1p(-arr)
    else:
        z = ((1.0 - arr) ** (-xi) - 1.0) / xi
    out = fit.threshold_u + fit.scale_sigma * z
    return float(out) if np.ndim(p) == 0 else out


def gpd_tail_prob(fit: GpdFit, s) -> float | np.ndarray:
    """Anomaly probability: beta at or below the threshold, beta*(1-P(s)) above."""
    arr = np.asarray(s, dtype=float)
    out = np.full(arr.shape, fit.beta)
    above = arr > fit.threshold_u
    if np.any(above):
        out[above] = fit.beta * (1.0 - gpd_cdf(fit, arr[above]))
    return float(out) if np.ndim(s) == 0 else out


def gpd_sample(sigma: float, xi: float, n: int, seed: int) -> np.ndarray:
    """Inverse-CDF sample from a GPD with location 0."""
    if sigma <= 0:
        raise ValidationError(f"sigma must be > 0, got {sigma}")
    if n <= 0:
        raise ValidationError(f"n must be > 0, got {n}")
    u = np.random.default_rng(seed).random(n)
    if abs(xi) <= XI_TOL:
        return -sigma * np.log1p(-u)
    return sigma * ((1.0 - u) ** (-xi) - 1.0) / xi
