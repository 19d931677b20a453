"""Claim-size distributions.

Each distribution bundles the density, CDF, tail (survival) function, mean,
and inverse CDF on [0, inf).  The tail is always computed from a direct
closed form, never as 1 - cdf, because the solvers convolve against it far
into the range where 1 - cdf is pure cancellation.  Sampling is inverse-CDF
throughout so that Monte Carlo consumes exactly one uniform per claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

__all__ = [
    "ClaimDistribution",
    "make_exponential",
    "make_half_normal",
    "make_log_normal",
    "make_weibull",
    "make_pareto",
    "from_config",
    "normal_cdf",
    "normal_ppf",
]

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x):
    """Standard normal CDF via the complementary error function."""
    x = np.asarray(x, dtype=float)
    return 0.5 * special.erfc(-x / _SQRT2)


def normal_ppf(u):
    """Standard normal inverse CDF."""
    return special.ndtri(u)


@dataclass(frozen=True)
class ClaimDistribution:
    """Positive claim-size distribution with vectorized evaluators.

    pdf/cdf/tail take y >= 0, ppf takes u in [0, 1).  All accept arrays.
    """

    family: str
    params: tuple
    mean: float
    pdf: Callable = field(repr=False)
    cdf: Callable = field(repr=False)
    tail: Callable = field(repr=False)
    ppf: Callable = field(repr=False)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.ppf(rng.random(size))


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


def make_exponential(k: float) -> ClaimDistribution:
    """Exponential claims with rate k: tail e^{-k y}, mean 1/k."""
    k = _positive("rate k", k)

    def pdf(y):
        y = np.asarray(y, dtype=float)
        return k * np.exp(-k * y)

    def cdf(y):
        y = np.asarray(y, dtype=float)
        return -np.expm1(-k * y)

    def tail(y):
        y = np.asarray(y, dtype=float)
        return np.exp(-k * y)

    def ppf(u):
        u = np.asarray(u, dtype=float)
        return -np.log1p(-u) / k

    return ClaimDistribution("exponential", (k,), 1.0 / k, pdf, cdf, tail, ppf)


def make_half_normal(v: float) -> ClaimDistribution:
    """|Z| scaled: density sqrt(2/pi)/v * e^{-y^2/(2 v^2)}, mean v sqrt(2/pi)."""
    v = _positive("scale v", v)

    def pdf(y):
        y = np.asarray(y, dtype=float)
        return math.sqrt(2.0 / math.pi) / v * np.exp(-(y * y) / (2.0 * v * v))

    def cdf(y):
        y = np.asarray(y, dtype=float)
        return special.erf(y / (v * _SQRT2))

    def tail(y):
        y = np.asarray(y, dtype=float)
        return special.erfc(y / (v * _SQRT2))

    def ppf(u):
        u = np.asarray(u, dtype=float)
        return v * _SQRT2 * special.erfinv(u)

    mean = v * math.sqrt(2.0 / math.pi)
    return ClaimDistribution("half_normal", (v,), mean, pdf, cdf, tail, ppf)


def make_log_normal(u: float, v: float) -> ClaimDistribution:
    """Log-normal: ln Y ~ N(u, v^2); mean e^{u + v^2/2}."""
    u = float(u)
    if not math.isfinite(u):
        raise ValueError(f"log-location u must be finite, got {u!r}")
    v = _positive("log-scale v", v)

    def pdf(y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y)
        out = np.zeros_like(y)
        pos = y > 0
        z = (np.log(y[pos]) - u) / v
        out[pos] = np.exp(-0.5 * z * z) / (y[pos] * v * math.sqrt(2.0 * math.pi))
        return out[0] if scalar else out

    def cdf(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            z = np.where(y > 0, (np.log(np.where(y > 0, y, 1.0)) - u) / v, -np.inf)
        return normal_cdf(z)

    def tail(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            z = np.where(y > 0, (np.log(np.where(y > 0, y, 1.0)) - u) / v, -np.inf)
        return 0.5 * special.erfc(z / _SQRT2)

    def ppf(q):
        q = np.asarray(q, dtype=float)
        return np.exp(u + v * special.ndtri(q))

    mean = math.exp(u + 0.5 * v * v)
    return ClaimDistribution("log_normal", (u, v), mean, pdf, cdf, tail, ppf)


def make_weibull(u: float, v: float) -> ClaimDistribution:
    """Weibull with scale u and shape v: tail e^{-(y/u)^v}, mean u Gamma(1 + 1/v).

    For shape v < 1 the density is unbounded at 0 (still integrable).
    """
    u = _positive("scale u", u)
    v = _positive("shape v", v)

    def pdf(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            z = y / u
            return (v / u) * z ** (v - 1.0) * np.exp(-(z**v))

    def cdf(y):
        y = np.asarray(y, dtype=float)
        return -np.expm1(-((y / u) ** v))

    def tail(y):
        y = np.asarray(y, dtype=float)
        return np.exp(-((y / u) ** v))

    def ppf(q):
        q = np.asarray(q, dtype=float)
        return u * (-np.log1p(-q)) ** (1.0 / v)

    mean = u * math.gamma(1.0 + 1.0 / v)
    return ClaimDistribution("weibull", (u, v), mean, pdf, cdf, tail, ppf)


def make_pareto(u: float, v: float) -> ClaimDistribution:
    """Shifted Pareto: tail (u / (u + y))^v with v > 1; mean u / (v - 1)."""
    u = _positive("scale u", u)
    v = float(v)
    if not (math.isfinite(v) and v > 1):
        raise ValueError(f"pareto shape v must exceed 1 for a finite mean, got {v!r}")

    def pdf(y):
        y = np.asarray(y, dtype=float)
        return (v / u) * (u / (u + y)) ** (v + 1.0)

    def cdf(y):
        y = np.asarray(y, dtype=float)
        return -np.expm1(v * np.log(u / (u + y)))

    def tail(y):
        y = np.asarray(y, dtype=float)
        return (u / (u + y)) ** v

    def ppf(q):
        q = np.asarray(q, dtype=float)
        return u * np.expm1(-np.log1p(-q) / v)

    return ClaimDistribution("pareto", (u, v), u / (v - 1.0), pdf, cdf, tail, ppf)


_FAMILIES = {
    "exponential": (make_exponential, 1),
    "half_normal": (make_half_normal, 1),
    "log_normal": (make_log_normal, 2),
    "weibull": (make_weibull, 2),
    "pareto": (make_pareto, 2),
}


def from_config(family: str, p1: float, p2: float | None = None) -> ClaimDistribution:
    """Build a distribution from a (family, p1[, p2]) configuration triple."""
    try:
        factory, arity = _FAMILIES[family]
    except KeyError:
        known = ", ".join(sorted(_FAMILIES))
        raise ValueError(f"unknown claim family {family!r}; known: {known}") from None
    if arity == 1:
        if p2 is not None:
            raise ValueError(f"claim family {family!r} takes one parameter, got two")
        return factory(p1)
    if p2 is None:
        raise ValueError(f"claim family {family!r} needs two parameters, got one")
    return factory(p1, p2)
