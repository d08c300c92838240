"""Generalized density models.

Every model supplies a log generalized density (log-pdf for continuous
variants, log-pmf for the Binomial) and seeded iid sampling. Models are
immutable after construction and safe to share across threads; sampling
takes an explicit seed and owns its generator state.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ArityError, ValidationError

LOG_2PI = math.log(2.0 * math.pi)


class DistributionModel:
    """Base class for all distribution variants."""

    arity = 1

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Normal(DistributionModel):
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"Normal sigma must be > 0, got {self.sigma}")

    def describe(self) -> str:
        return f"normal(mu={self.mu:g},sigma={self.sigma:g})"


@dataclass(frozen=True)
class StudentT(DistributionModel):
    nu: float
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise ValidationError(f"StudentT nu must be > 0, got {self.nu}")
        if not self.scale > 0:
            raise ValidationError(f"StudentT scale must be > 0, got {self.scale}")

    def describe(self) -> str:
        return f"t(nu={self.nu:g},loc={self.loc:g},scale={self.scale:g})"


@dataclass(frozen=True)
class Gamma(DistributionModel):
    shape: float
    rate: float

    def __post_init__(self):
        if not self.shape > 0:
            raise ValidationError(f"Gamma shape must be > 0, got {self.shape}")
        if not self.rate > 0:
            raise ValidationError(f"Gamma rate must be > 0, got {self.rate}")

    def describe(self) -> str:
        return f"gamma(shape={self.shape:g},rate={self.rate:g})"


@dataclass(frozen=True)
class Binomial(DistributionModel):
    trials: int
    prob: float

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 0:
            raise ValidationError(f"Binomial trials must be a nonnegative integer, got {self.trials}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValidationError(f"Binomial prob must be in [0,1], got {self.prob}")

    def describe(self) -> str:
        return f"binomial(trials={self.trials},prob={self.prob:g})"


@dataclass(frozen=True)
class IndependentProduct(DistributionModel):
    components: tuple

    def __post_init__(self):
        if len(self.components) == 0:
            raise ValidationError("IndependentProduct needs at least one component")
        for c in self.components:
            if not isinstance(c, DistributionModel):
                raise ValidationError(f"IndependentProduct component is not a model: {c!r}")
            if isinstance(c, IndependentProduct):
                raise ValidationError("nested IndependentProduct models are not supported")

    @property
    def arity(self) -> int:
        return len(self.components)

    def describe(self) -> str:
        return "product(" + ",".join(c.describe() for c in self.components) + ")"


def _as_scalar_array(model: DistributionModel, data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 1:
        raise ArityError(
            f"model {model.describe()} expects scalar observations; got array of shape {arr.shape}"
        )
    return arr


def _normal_logpdf(model: Normal, y: np.ndarray) -> np.ndarray:
    z = (y - model.mu) / model.sigma
    return -0.5 * LOG_2PI - math.log(model.sigma) - 0.5 * z * z


def _student_t_logpdf(model: StudentT, y: np.ndarray) -> np.ndarray:
    nu = model.nu
    z = (y - model.loc) / model.scale
    const = (
        special.gammaln((nu + 1.0) / 2.0)
        - special.gammaln(nu / 2.0)
        - 0.5 * math.log(nu * math.pi)
        - math.log(model.scale)
    )
    return const - (nu + 1.0) / 2.0 * np.log1p(z * z / nu)


def _gamma_logpdf(model: Gamma, y: np.ndarray) -> np.ndarray:
    a, r = model.shape, model.rate
    out = np.full_like(y, -np.inf)
    pos = y > 0
    yp = y[pos]
    out[pos] = a * math.log(r) + (a - 1.0) * np.log(yp) - r * yp - special.gammaln(a)
    # y = 0 is the support boundary: density limit is rate for shape 1,
    # 0 for shape > 1, and +inf for shape < 1.
    zero = y == 0
    if np.any(zero):
        if a == 1.0:
            out[zero] = math.log(r)
        elif a < 1.0:
            out[zero] = np.inf
    return out


def _binomial_logpmf(model: Binomial, y) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ArityError(
            f"model {model.describe()} expects scalar counts; got array of shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
        raise ArityError(f"model {model.describe()} expects integer counts")
    k = arr.astype(np.int64)
    n, p = model.trials, model.prob
    out = np.full(k.shape, -np.inf)
    ok = (k >= 0) & (k <= n)
    kk = k[ok].astype(float)
    out[ok] = (
        special.gammaln(n + 1.0)
        - special.gammaln(kk + 1.0)
        - special.gammaln(n - kk + 1.0)
        + special.xlogy(kk, p)
        + special.xlogy(n - kk, 1.0 - p)
    )
    return out


def log_density_array(model: DistributionModel, data) -> np.ndarray:
    """Vectorized log generalized density over an array of observations.

    ``data`` has shape (n,) for scalar models and (n, k) for a k-component
    IndependentProduct. Returns an (n,) array; -inf marks zero density.
    """
    if isinstance(model, Normal):
        return _normal_logpdf(model, _as_scalar_array(model, data))
    if isinstance(model, StudentT):
        return _student_t_logpdf(model, _as_scalar_array(model, data))
    if isinstance(model, Gamma):
        return _gamma_logpdf(model, _as_scalar_array(model, data))
    if isinstance(model, Binomial):
        return _binomial_logpmf(model, data)
    if isinstance(model, IndependentProduct):
        arr = np.asarray(data, dtype=float)
        k = model.arity
        if arr.ndim != 2 or arr.shape[1] != k:
            raise ArityError(
                f"model {model.describe()} expects {k}-vector observations; "
                f"got array of shape {arr.shape}"
            )
        total = np.zeros(arr.shape[0])
        for j, comp in enumerate(model.components):
            total = total + log_density_array(comp, arr[:, j])
        return total
    raise ValidationError(f"unknown model type: {type(model).__name__}")


def log_density(model: DistributionModel, y) -> float:
    """Log generalized density of one observation.

    ``y`` is a scalar for scalar models and a length-k sequence for a
    k-component IndependentProduct. Returns -inf where the density is zero
    (e.g. Gamma at y < 0, Binomial count above trials).
    """
    if isinstance(model, IndependentProduct):
        point = np.atleast_1d(np.asarray(y, dtype=float))
        if point.ndim != 1 or point.shape[0] != model.arity:
            raise ArityError(
                f"model {model.describe()} expects a {model.arity}-vector, got shape {point.shape}"
            )
        return float(log_density_array(model, point[None, :])[0])
    if np.ndim(y) != 0:
        raise ArityError(f"model {model.describe()} expects a scalar observation, got {y!r}")
    return float(log_density_array(model, np.atleast_1d(y))[0])


def sample_array(model: DistributionModel, shape, rng: np.random.Generator) -> np.ndarray:
    """Draw iid observations with an existing generator.

    ``shape`` follows numpy conventions; product models append an arity axis.
    """
    if isinstance(model, Normal):
        return rng.normal(model.mu, model.sigma, size=shape)
    if isinstance(model, StudentT):
        return model.loc + model.scale * rng.standard_t(model.nu, size=shape)
    if isinstance(model, Gamma):
        return rng.gamma(model.shape, 1.0 / model.rate, size=shape)
    if isinstance(model, Binomial):
        if model.trials == 0:
            return np.zeros(shape, dtype=np.int64)
        return rng.binomial(model.trials, model.prob, size=shape)
    if isinstance(model, IndependentProduct):
        cols = [sample_array(c, shape, rng) for c in model.components]
        return np.stack(cols, axis=-1).astype(float)
    raise ValidationError(f"unknown model type: {type(model).__name__}")


def sample(model: DistributionModel, n: int, seed: int) -> np.ndarray:
    """n iid draws from the model, deterministic for a given seed."""
    if n <= 0:
        raise ValidationError(f"sample size must be positive, got {n}")
    rng = np.random.default_rng(seed)
    return sample_array(model, n, rng)


def normal_cdf(x):
    """Standard Normal distribution function, accurate to ~1e-15."""
    return special.ndtr(x)


def normal_quantile(p):
    """Inverse of the standard Normal distribution function on (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValidationError(f"normal_quantile requires p in (0,1), got {p}")
    out = special.ndtri(arr)
    return float(out) if np.ndim(p) == 0 else out


def mad_to_sigma() -> float:
    """Scale factor turning a median absolute deviation into a Normal sigma."""
    return 1.0 / normal_quantile(0.75)


def scalar_cdf(model: DistributionModel, y) -> np.ndarray:
    """Distribution function of a scalar model (used by the assumed estimator)."""
    from scipy import stats

    arr = np.asarray(y, dtype=float)
    if isinstance(model, Normal):
        return stats.norm.cdf(arr, loc=model.mu, scale=model.sigma)
    if isinstance(model, StudentT):
        return stats.t.cdf(arr, df=model.nu, loc=model.loc, scale=model.scale)
    if isinstance(model, Gamma):
        return stats.gamma.cdf(arr, a=model.shape, scale=1.0 / model.rate)
    if isinstance(model, Binomial):
        return stats.binom.cdf(arr, n=model.trials, p=model.prob)
    raise ArityError(f"scalar_cdf is undefined for {model.describe()}")


# --- model spec parsing -----------------------------------------------------
#
# Text form used by config files and the CLI --model flag, e.g.
#   normal(mu=0,sigma=1)   t(nu=4)   gamma(shape=2,rate=2)
#   product(gamma(2,2),gamma(2,2))   binomial(trials=265,prob=0.148)

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*|[(),=]|[-+]?\d+\.?\d*(?:[eE][-+]?\d+)?)")

_SIGNATURES = {
    "normal": (Normal, ("mu", "sigma"), {}),
    "t": (StudentT, ("nu", "loc", "scale"), {"loc": 0.0, "scale": 1.0}),
    "studentt": (StudentT, ("nu", "loc", "scale"), {"loc": 0.0, "scale": 1.0}),
    "gamma": (Gamma, ("shape", "rate"), {}),
    "binomial": (Binomial, ("trials", "prob"), {}),
}


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ValidationError(f"bad model spec near character {pos}: {text[pos:pos + 12]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None:
            raise ValidationError("model spec ended unexpectedly")
        if expected is not None and tok != expected:
            raise ValidationError(f"expected {expected!r} in model spec, got {tok!r}")
        self.i += 1
        return tok

    def parse_model(self) -> DistributionModel:
        name = self.take().lower()
        self.take("(")
        positional, named = [], {}
        if self.peek() != ")":
            while True:
                self._parse_arg(positional, named)
                if self.peek() == ",":
                    self.take(",")
                    continue
                break
        self.take(")")
        return self._build(name, positional, named)

    def _parse_arg(self, positional, named):
        tok = self.peek()
        if tok is not None and tok.lower() in _SIGNATURES or tok == "product":
            positional.append(self.parse_model())
            return
        if re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok or ""):
            name = self.take()
            if self.peek() == "=":
                self.take("=")
                nxt = self.peek()
                if nxt is not None and (nxt.lower() in _SIGNATURES or nxt == "product"):
                    named[name] = self.parse_model()
                else:
                    named[name] = float(self.take())
                return
            raise ValidationError(f"unknown model name {name!r} in model spec")
        positional.append(float(self.take()))

    def _build(self, name, positional, named):
        if name == "product":
            components = list(positional) + list(named.values())
            if not all(isinstance(c, DistributionModel) for c in components):
                raise ValidationError("product(...) arguments must all be models")
            return IndependentProduct(tuple(components))
        if name not in _SIGNATURES:
            raise ValidationError(f"unknown model name {name!r} in model spec")
        cls, params, defaults = _SIGNATURES[name]
        kwargs = dict(defaults)
        if len(positional) > len(params):
            raise ValidationError(f"{name}() takes at most {len(params)} arguments")
        for value, pname in zip(positional, params):
            kwargs[pname] = value
        for pname, value in named.items():
            if pname not in params:
                raise ValidationError(f"{name}() has no parameter {pname!r}")
            if pname in kwargs and pname not in defaults and params.index(pname) < len(positional):
                raise ValidationError(f"{name}() parameter {pname!r} given twice")
            kwargs[pname] = value
        missing = [p for p in params if p not in kwargs]
        if missing:
            raise ValidationError(f"{name}() is missing parameters: {', '.join(missing)}")
        if cls is Binomial:
            kwargs["trials"] = int(kwargs["trials"])
        if any(isinstance(v, DistributionModel) for v in kwargs.values()):
            raise ValidationError(f"{name}() parameters must be numbers")
        return cls(**kwargs)


def parse_model(text: str) -> DistributionModel:
    """Parse a model from its text form, e.g. ``product(gamma(2,2),gamma(2,2))``."""
    parser = _Parser(_tokenize(text))
    model = parser.parse_model()
    if parser.peek() is not None:
        raise ValidationError(f"trailing content in model spec: {' '.join(parser.tokens[parser.i:])!r}")
    return model
