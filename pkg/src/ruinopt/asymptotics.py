"""Closed-form behaviour of the optimal strategy and ruin probability.

Three groups live here: the small-surplus expansions (initial investment,
its slope, the value-slope parabola), the large-surplus expansions under
exponential claims (investment limit, 1/x correction, ruin tail shape with
its fitted constant), and the classical no-investment ruin probability used
as an independent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .model import DerivedConstants, ModelParams, Regime, RegimeReport, classify_infinity_regime, derive_constants
from .results import NormalizedSurvival, ValueGrid, normalize_delta

__all__ = [
    "strategy_slope_zero",
    "value_expansion_zero",
    "strategy_expansion_infinity_exp",
    "ruin_tail_exp",
    "TailFit",
    "fit_tail_constant",
    "TailStrategy",
    "constrained_infinity_strategy",
    "no_investment_ruin_reference",
    "AsymptoteReport",
    "asymptote_report",
]


def strategy_slope_zero(constants: DerivedConstants, params: ModelParams) -> float:
    """Initial decay rate S of the unrestricted optimal investment.

    a*(x) = a*(0+) - S x + o(x).  Two algebraically equal forms are
    evaluated, the explicit one and the one through the second-order
    slope coefficient eta; they must agree to 1e-10 relative, which traps
    transcription slips in either.
    """
    p = params
    ex = p.excess
    if ex == 0.0:
        return 0.0
    k = constants
    s = math.sqrt(k.c_rho**2 + 2.0 * k.gamma * k.sigma_rho2)
    explicit = ex / p.sigma**2 - (
        (p.lam - p.r + 2.0 * k.gamma) * (k.a_star_zero + p.rho * p.sigma1 / p.sigma)
        + k.c_rho * ex / p.sigma**2
    ) / s
    via_eta = ex / p.sigma**2 * (1.0 + 2.0 * k.eta / k.B)
    scale = max(abs(explicit), abs(via_eta), 1e-300)
    if abs(explicit - via_eta) > 1e-10 * scale:
        raise AssertionError(
            f"slope forms disagree: explicit {explicit!r} vs eta-form {via_eta!r}"
        )
    return explicit


def value_expansion_zero(constants: DerivedConstants):
    """Small-surplus parabola of the value integral: V(x)/V'(0) = x - B/2 x^2 + o(x^2)."""
    B = constants.B

    def expansion(x):
        x = np.asarray(x, dtype=float)
        out = x - 0.5 * B * x * x
        return out if out.ndim else float(out)

    return expansion


def strategy_expansion_infinity_exp(params: ModelParams, m: float) -> tuple[float, float]:
    """Large-surplus expansion of the unrestricted investment, exponential claims.

    Returns (limit, coeff) with a*(x) = limit + coeff / x + o(1/x):
    limit = (mu-r) m / sigma^2 - rho sigma1 / sigma and
    coeff = -(1 - lam/r)(mu-r) m^2 / sigma^2.
    """
    p = params
    if not (math.isfinite(m) and m > 0):
        raise ValueError(f"claim mean must be positive, got {m!r}")
    limit = p.excess * m / p.sigma**2 - p.rho * p.sigma1 / p.sigma
    coeff = -(1.0 - p.lam / p.r) * p.excess * m * m / p.sigma**2
    return limit, coeff


def ruin_tail_exp(params: ModelParams, m: float, K1: float, x) -> np.ndarray:
    """Leading ruin-probability tail K1 e^{-x/m} x^{lam/r - 1}, exponential claims."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("tail formula needs x > 0; the power factor blows up at 0")
    out = K1 * np.exp(-x / m) * x ** (params.lam / params.r - 1.0)
    return out if out.ndim else float(out)


@dataclass
class TailFit:
    """Tail-constant fit of a solved grid against the exponential-claims shape."""

    K_vprime: float       # plateau of v(x) e^{x/m} x^{1 - lam/r}
    K1_ruin: float        # matching ruin-tail constant m K_vprime / V(inf)
    plateau_ratio: float  # max/min of the compensated product over the window
    ok: bool              # plateau_ratio <= 1.05
    window: tuple[float, float]


def fit_tail_constant(
    vg: ValueGrid,
    params: ModelParams,
    m: float,
    window: tuple[float, float] = (30.0, 40.0),
) -> TailFit:
    """Fit the multiplicative constant of the exponential-claims tail.

    Compensates the solved slope by e^{x/m} x^{1 - lam/r} over the window;
    on a grid that reached the asymptotic regime the product is flat, and
    its median is the constant.  plateau_ratio quantifies the flatness and
    ok flags whether the window was asymptotic at all.
    """
    lo, hi = window
    if not (0.0 < lo < hi):
        raise ValueError(f"bad fit window {window!r}")
    if hi > vg.grid.x_max * (1.0 + 1e-12):
        raise ValueError(
            f"fit window {window!r} reaches beyond the grid end {vg.grid.x_max:.6g}"
        )
    x = vg.grid.points
    mask = (x >= lo) & (x <= hi)
    xs = x[mask]
    vs = vg.v[mask]
    if xs.size < 4:
        raise ValueError("fit window contains fewer than 4 grid nodes")
    if np.any(vs <= 0.0):
        raise ValueError("slope is not positive over the fit window")
    # log compensator avoids overflow of e^{x/m} at large x
    logc = np.log(vs) + xs / m - (params.lam / params.r - 1.0) * np.log(xs)
    K_v = float(np.exp(np.median(logc)))
    ratio = float(np.exp(logc.max() - logc.min()))
    norm = normalize_delta(vg, claim_mean=m)
    K1 = m * K_v / norm.v_inf_hat
    return TailFit(K_vprime=K_v, K1_ruin=K1, plateau_ratio=ratio, ok=ratio <= 1.05, window=(lo, hi))


@dataclass
class TailStrategy:
    """Large-surplus behaviour of the capped strategy, exponential claims."""

    regime: Regime
    limit: float
    coeff: float | None
    report: RegimeReport


def constrained_infinity_strategy(params: ModelParams, cap: float, m: float) -> TailStrategy:
    """Where the capped strategy settles as the surplus grows.

    The uncapped limit is q = (mu-r) m / sigma^2 - rho sigma1 / sigma; the
    capped strategy follows q when it is inside [0, cap] (with the 1/x
    refinement of the uncapped expansion when strictly inside) and pins to
    the violated endpoint otherwise.
    """
    p = params if params.cap == cap else replace(params, cap=cap)
    constants = derive_constants(p, claim_mean=m)
    report = classify_infinity_regime(constants, p, m)
    q_inf, open_coeff = strategy_expansion_infinity_exp(p, m)
    regime = report.regime if report.regime is not Regime.BOUNDARY else report.resolution
    if regime is Regime.FULL_CAP:
        return TailStrategy(report.regime, cap, None, report)
    if regime is Regime.ZERO_INVESTMENT:
        return TailStrategy(report.regime, 0.0, None, report)
    if regime is Regime.INTERIOR:
        # the uncapped 1/x correction applies verbatim only strictly inside
        coeff = open_coeff if report.regime is Regime.INTERIOR else None
        return TailStrategy(report.regime, q_inf, coeff, report)
    # unresolved boundary (lam = r): report the threshold value itself
    return TailStrategy(report.regime, min(max(q_inf, 0.0), cap), None, report)


def no_investment_ruin_reference(c: float, r: float, lam: float, m: float, x: float) -> float:
    """Ruin probability with no investment at all, exponential claims.

    Closed form up to two one-dimensional integrals:

        psi(x) = int_x^inf e^{-u/m} (1 + r u / c)^{lam/r - 1} du
                 / [ c/lam + int_0^inf e^{-u/m} (1 + r u / c)^{lam/r - 1} du ].

    Entirely independent of the dynamic programming machinery; used as an
    oracle for the a = 0 corner of the solvers and the simulator.
    """
    for name, val in (("c", c), ("r", r), ("lam", lam), ("m", m)):
        if not (math.isfinite(val) and val > 0):
            raise ValueError(f"{name} must be positive, got {val!r}")
    if x < 0:
        raise ValueError(f"surplus must be nonnegative, got {x!r}")
    expo = lam / r - 1.0

    def integrand(u):
        return math.exp(-u / m) * (1.0 + r * u / c) ** expo

    upper, _ = quad(integrand, x, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    full, _ = quad(integrand, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    return upper / (c / lam + full)


@dataclass
class AsymptoteReport:
    """Everything the closed forms say about a parameter set, in one record."""

    a_star_zero: float
    strategy_slope_zero: float
    v_prime_zero: float
    B: float
    eta: float
    value_curvature: float              # coefficient of -x^2/2 in V/V'(0)
    infinity_limit: float | None = None
    infinity_coeff: float | None = None
    tail_exponent: float | None = None
    K1_ruin: float | None = None        # fitted, needs a solved grid
    delta_slope_zero: float | None = None  # fitted 1/V(inf), needs a solved grid
    fit: TailFit | None = None


def asymptote_report(
    params: ModelParams,
    claim_mean: float | None = None,
    vg: ValueGrid | None = None,
    window: tuple[float, float] = (30.0, 40.0),
) -> AsymptoteReport:
    """Assemble the closed-form constants, plus fitted ones when a grid is given.

    claim_mean activates the exponential-claims large-surplus family; vg
    (a solved unrestricted grid) activates the fitted tail constant K1 and
    the survival slope at 0.
    """
    constants = derive_constants(params, claim_mean=claim_mean)
    report = AsymptoteReport(
        a_star_zero=constants.a_star_zero,
        strategy_slope_zero=strategy_slope_zero(constants, params),
        v_prime_zero=constants.v_prime_zero,
        B=constants.B,
        eta=constants.eta,
        value_curvature=constants.B,
    )
    if claim_mean is not None:
        limit, coeff = strategy_expansion_infinity_exp(params, claim_mean)
        report.infinity_limit = limit
        report.infinity_coeff = coeff
        report.tail_exponent = constants.tail_exponent
    if vg is not None:
        norm = normalize_delta(vg, claim_mean=claim_mean)
        report.delta_slope_zero = 1.0 / norm.v_inf_hat if norm.v_inf_hat > 0 else None
        if claim_mean is not None:
            fit = fit_tail_constant(vg, params, claim_mean, window=window)
            report.fit = fit
            report.K1_ruin = fit.K1_ruin
    return report
