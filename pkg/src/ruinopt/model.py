"""Model parameters and closed-form derived constants.

The surplus process: premiums arrive at rate c, claims arrive with Poisson
intensity lam, the insurer keeps an amount a(x) invested in a stock with
drift mu and volatility sigma while the rest earns the risk-free rate r,
and the surplus itself carries a Brownian perturbation with volatility
sigma1, correlated with the stock driver by rho.

Everything in this module is exact arithmetic on the parameters: the
behaviour of the optimal strategy at zero and at infinity, and the
correlation thresholds separating the qualitative regimes, all have closed
forms that the grid solvers are later checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "ModelParams",
    "DerivedConstants",
    "Regime",
    "RegimeReport",
    "derive_constants",
    "classify_zero_regime",
    "classify_infinity_regime",
]

# relative tolerance when deciding whether rho sits exactly on a regime
# threshold; inside this band the classification is reported as BOUNDARY
_THRESHOLD_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Market and insurance parameters.

    cap is the largest amount that may be invested (None = no restriction,
    investment may be any real number, short positions included).
    """

    c: float
    r: float
    mu: float
    sigma: float
    sigma1: float
    rho: float
    lam: float
    cap: float | None = None

    def __post_init__(self):
        for name in ("c", "r", "mu", "sigma", "sigma1", "lam"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        if not (math.isfinite(self.rho) and abs(self.rho) < 1.0):
            raise ValueError(f"rho must satisfy |rho| < 1, got {self.rho!r}")
        if self.cap is not None and not (math.isfinite(self.cap) and self.cap > 0):
            raise ValueError(f"cap must be positive when given, got {self.cap!r}")

    @property
    def excess(self) -> float:
        """Excess return of the stock over the risk-free rate."""
        return self.mu - self.r

    @property
    def constrained(self) -> bool:
        return self.cap is not None

    def quadratic_form(self, a):
        """Diffusion coefficient Q(a) = sigma^2 a^2 + 2 rho sigma sigma1 a + sigma1^2.

        Positive for every real a because |rho| < 1.
        """
        return self.sigma**2 * a * a + 2.0 * self.rho * self.sigma * self.sigma1 * a + self.sigma1**2


class Regime(Enum):
    """Qualitative behaviour of the optimal investment near a boundary."""

    FULL_CAP = "full_cap"
    INTERIOR = "interior"
    ZERO_INVESTMENT = "zero_investment"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    boundary: str | None = None      # which threshold was hit, when regime is BOUNDARY
    resolution: Regime | None = None  # behaviour on the boundary itself, when known
    note: str = ""


@dataclass(frozen=True)
class DerivedConstants:
    """Closed-form constants of the model.

    Fields that need the claim mean (the exponential-claims large-surplus
    family) or the investment cap are None when that input is missing.
    """

    gamma: float          # (mu - r)^2 / (2 sigma^2), Sharpe-squared over 2
    c_rho: float          # premium rate corrected for correlation drag
    sigma_rho2: float     # residual perturbation variance sigma1^2 (1 - rho^2)
    B: float              # curvature of the scaled value slope at 0: v'(0+) = -B (interior)
    eta: float            # second-order coefficient of the slope expansion at 0
    a_star_zero: float    # limit of the unconstrained optimal investment at 0+
    v_prime_zero: float   # v'(0+) in the active regime (cap-aware)
    tail_exponent: float  # lam / r - 1, power correction in the exponential-claims tail
    rho1: float           # zero-investment threshold at x = 0
    rho2: float | None = None   # full-cap threshold at x = 0 (needs cap)
    rho3: float | None = None   # zero-investment threshold at infinity (needs claim mean)
    rho4: float | None = None   # full-cap threshold at infinity (needs cap and claim mean)
    a_tilde0: float | None = None  # large-x investment limit, exponential claims
    a_tilde1: float | None = None  # 1/x coefficient of that expansion
    d0: float | None = None        # decay rate of seed perturbations in the large-x ODE


def _curvature_root_s(gamma: float, c_rho: float, sigma_rho2: float) -> float:
    return math.sqrt(c_rho * c_rho + 2.0 * gamma * sigma_rho2)


def _min_zero_curvature(p: ModelParams) -> tuple[float, float]:
    """Minimize g(a) = -2 (c + (mu-r) a) / Q(a) over [0, cap].

    This is the capped value-slope at 0: candidates are the endpoints and
    the stationary points of g inside (0, cap).  Returns (value, argmin);
    ties go to the smaller investment.
    """
    A = p.cap
    ex = p.excess
    candidates = [0.0, A]
    # stationary condition of g: (mu-r) sigma^2 a^2 + 2 c sigma^2 a
    #                            + (2 rho sigma sigma1 c - sigma1^2 (mu-r)) = 0
    qa = ex * p.sigma**2
    qb = 2.0 * p.c * p.sigma**2
    qc = 2.0 * p.rho * p.sigma * p.sigma1 * p.c - p.sigma1**2 * ex
    if qa == 0.0:
        if qb != 0.0:
            candidates.append(-qc / qb)
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            root = math.sqrt(disc)
            # standard stable quadratic roots
            q = -0.5 * (qb + math.copysign(root, qb))
            candidates.append(q / qa)
            if q != 0.0:
                candidates.append(qc / q)
    best_val, best_a = math.inf, 0.0
    for a in sorted(c for c in candidates if 0.0 <= c <= A):
        val = -2.0 * (p.c + ex * a) / p.quadratic_form(a)
        if val < best_val:
            best_val, best_a = val, a
    return best_val, best_a


def derive_constants(params: ModelParams, claim_mean: float | None = None) -> DerivedConstants:
    """Evaluate every closed-form constant available for these parameters.

    claim_mean feeds the exponential-claims large-surplus family (rho3,
    rho4, the investment limit and its 1/x correction, d0); pass the mean
    of the claim distribution when it is exponential, otherwise leave None.
    """
    p = params
    ex = p.excess
    gamma = ex * ex / (2.0 * p.sigma**2)
    c_rho = p.c - p.rho * ex * p.sigma1 / p.sigma
    sigma_rho2 = p.sigma1**2 * (1.0 - p.rho * p.rho)
    s = _curvature_root_s(gamma, c_rho, sigma_rho2)
    B = (c_rho + s) / sigma_rho2
    # c_rho - B sigma_rho2 = -s exactly, so write eta over -2s and avoid
    # the cancellation of the raw denominator
    eta = -(p.lam - p.r + 2.0 * gamma + B * c_rho) / (2.0 * s)
    a_star_zero = ex / (p.sigma**2 * B) - p.rho * p.sigma1 / p.sigma
    tail_exponent = p.lam / p.r - 1.0

    rho1 = ex * p.sigma1 / (2.0 * p.c * p.sigma)
    rho2 = None
    if p.cap is not None:
        rho2 = rho1 - (ex * p.cap**2 + 2.0 * p.c * p.cap) * p.sigma / (2.0 * p.c * p.sigma1)

    if p.cap is None:
        v_prime_zero = -B
    else:
        v_prime_zero, _ = _min_zero_curvature(p)

    rho3 = rho4 = a_tilde0 = a_tilde1 = d0 = None
    if claim_mean is not None:
        m = float(claim_mean)
        if not (math.isfinite(m) and m > 0):
            raise ValueError(f"claim_mean must be positive and finite, got {claim_mean!r}")
        a_tilde0 = ex * m / p.sigma**2
        a_tilde1 = -(1.0 - p.lam / p.r) * ex * m * m / p.sigma**2
        rho3 = m * ex / (p.sigma * p.sigma1)
        if p.cap is not None:
            rho4 = rho3 - p.cap * p.sigma / p.sigma1
        d0 = -2.0 * p.r / (sigma_rho2 + ex * ex * m * m / p.sigma**2)

    return DerivedConstants(
        gamma=gamma,
        c_rho=c_rho,
        sigma_rho2=sigma_rho2,
        B=B,
        eta=eta,
        a_star_zero=a_star_zero,
        v_prime_zero=v_prime_zero,
        tail_exponent=tail_exponent,
        rho1=rho1,
        rho2=rho2,
        rho3=rho3,
        rho4=rho4,
        a_tilde0=a_tilde0,
        a_tilde1=a_tilde1,
        d0=d0,
    )


def _on_threshold(rho: float, threshold: float) -> bool:
    return math.isclose(rho, threshold, rel_tol=_THRESHOLD_RTOL, abs_tol=1e-15)


def classify_zero_regime(constants: DerivedConstants, params: ModelParams) -> RegimeReport:
    """Behaviour of the capped optimal investment as the surplus tends to 0.

    Needs a cap and mu > r.  Below rho2 the whole cap is invested, above
    rho1 nothing is, and between the two the optimum starts at the interior
    point a_star_zero.  Exactly on a threshold the two adjacent regimes
    coincide (the formulas are continuous there), reported as BOUNDARY with
    the matching value noted.
    """
    p = params
    if p.cap is None:
        raise ValueError("zero-surplus regime classification needs an investment cap")
    if p.mu <= p.r:
        raise ValueError("zero-surplus regime classification needs mu > r")
    rho1 = constants.rho1
    rho2 = constants.rho2
    if rho2 is None:
        rho2 = rho1 - (p.excess * p.cap**2 + 2.0 * p.c * p.cap) * p.sigma / (2.0 * p.c * p.sigma1)
    if _on_threshold(p.rho, rho2):
        return RegimeReport(
            Regime.BOUNDARY,
            boundary="rho2",
            resolution=Regime.FULL_CAP,
            note="interior optimum meets the cap; both formulas give a = cap",
        )
    if _on_threshold(p.rho, rho1):
        return RegimeReport(
            Regime.BOUNDARY,
            boundary="rho1",
            resolution=Regime.ZERO_INVESTMENT,
            note="interior optimum reaches 0; both formulas give a = 0",
        )
    if p.rho < rho2:
        return RegimeReport(Regime.FULL_CAP)
    if p.rho > rho1:
        return RegimeReport(Regime.ZERO_INVESTMENT)
    return RegimeReport(Regime.INTERIOR)


def classify_infinity_regime(constants: DerivedConstants, params: ModelParams, claims) -> RegimeReport:
    """Behaviour of the capped optimal investment as the surplus grows.

    Exponential claims only.  `claims` is either the claim mean (a float)
    or a ClaimDistribution, in which case its family is checked.  The
    uncapped investment tends to q_inf = (mu-r) m / sigma^2 - rho sigma1 / sigma;
    the capped optimum follows it when 0 <= q_inf <= cap and saturates
    otherwise.  On a threshold the sign of lam - r decides, and lam = r is
    genuinely unresolved by the expansion.
    """
    p = params
    if p.cap is None:
        raise ValueError("large-surplus regime classification needs an investment cap")
    if p.mu <= p.r:
        raise ValueError("large-surplus regime classification needs mu > r")
    if hasattr(claims, "family"):
        if claims.family != "exponential":
            raise ValueError(
                f"large-surplus regime formulas hold for exponential claims, got {claims.family!r}"
            )
        m = claims.mean
    else:
        m = float(claims)
    if not (math.isfinite(m) and m > 0):
        raise ValueError(f"claim mean must be positive and finite, got {m!r}")

    rho3 = m * p.excess / (p.sigma * p.sigma1)
    rho4 = rho3 - p.cap * p.sigma / p.sigma1

    if _on_threshold(p.rho, rho4):
        if p.lam > p.r:
            res, note = Regime.FULL_CAP, "claim load exceeds discounting; the cap stays binding"
        elif p.lam < p.r:
            res, note = Regime.INTERIOR, "discounting dominates; the optimum comes off the cap"
        else:
            res, note = None, "lam = r: first-order expansion cannot split the tie"
        return RegimeReport(Regime.BOUNDARY, boundary="rho4", resolution=res, note=note)
    if _on_threshold(p.rho, rho3):
        if p.lam > p.r:
            res, note = Regime.INTERIOR, "claim load keeps the optimum interior"
        elif p.lam < p.r:
            res, note = Regime.ZERO_INVESTMENT, "discounting pushes the optimum to 0"
        else:
            res, note = None, "lam = r: first-order expansion cannot split the tie"
        return RegimeReport(Regime.BOUNDARY, boundary="rho3", resolution=res, note=note)
    if p.rho < rho4:
        return RegimeReport(Regime.FULL_CAP)
    if p.rho > rho3:
        return RegimeReport(Regime.ZERO_INVESTMENT)
    return RegimeReport(Regime.INTERIOR)
