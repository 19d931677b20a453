"""Independent ODE routes to the exponential-claims solution.

Under exponential claims the integro-differential equations collapse to
genuine ODEs, giving two cross-checks that share no code with the grid
solvers:

* the feedback function a~(x) = -(mu-r)/sigma^2 * V'(x)/V''(x) satisfies an
  explicit first-order ODE; the optimal investment is a~(x) - rho sigma1/sigma,
  so integrating it forward from a large-x series seed reproduces the
  solver's strategy with no dynamic programming,

* for a constant strategy the value slope satisfies a linear second-order
  ODE with polynomial coefficients, integrable to machine accuracy.

Forward is the stable direction for the feedback ODE: a perturbation d(x)
of the bounded solution decays like exp(d0 (x^2 - x0^2) / 2) with d0 < 0,
so integrating backward amplifies seed error instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .model import ModelParams
from .numerics import Grid
from .results import ValueGrid

__all__ = [
    "a_tilde_rhs",
    "TildeACurve",
    "solve_a_tilde",
    "CurveSamples",
    "reconstruct_vprime",
    "LinearOdeCoeffs",
    "linear_ode_coeffs",
    "solve_linear_const_strategy",
]


def a_tilde_rhs(x: float, a: float, params: ModelParams, m: float) -> float:
    """Right-hand side of the feedback ODE for the optimal investment.

        [sigma^2 a^2 + sigma_rho^2] a' =
            -(sigma^2/m) a^3
            - 2 [ r - lam + c_rho/m - gamma + (r/m) x ] (sigma^2/(mu-r)) a^2
            + 2 [ c_rho + r x + sigma_rho^2/(2m) ] a
            - sigma_rho^2 (mu-r)/sigma^2.

    Exponential claims with mean m; needs mu != r.
    """
    p = params
    ex = p.excess
    if ex == 0.0:
        raise ValueError("feedback ODE needs mu != r (the a^2 coefficient divides by mu - r)")
    gamma = ex * ex / (2.0 * p.sigma**2)
    c_rho = p.c - p.rho * ex * p.sigma1 / p.sigma
    sigma_rho2 = p.sigma1**2 * (1.0 - p.rho * p.rho)
    s2 = p.sigma**2
    num = (
        -(s2 / m) * a**3
        - 2.0 * (p.r - p.lam + c_rho / m - gamma + (p.r / m) * x) * (s2 / ex) * a**2
        + 2.0 * (c_rho + p.r * x + sigma_rho2 / (2.0 * m)) * a
        - sigma_rho2 * ex / s2
    )
    return num / (s2 * a * a + sigma_rho2)


@dataclass
class TildeACurve:
    """Feedback-ODE solution with its seed bookkeeping."""

    x: np.ndarray
    a: np.ndarray
    x_seed: float
    seed: float
    series: tuple[float, float]          # (limit, 1/x coefficient) used for seeding
    seed_note: str | None = None
    back_x: np.ndarray | None = None     # optional backward leg, ascending
    back_a: np.ndarray | None = None
    backward_warning: str | None = None

    def __call__(self, xq):
        if self.back_x is not None:
            xs = np.concatenate([self.back_x[:-1], self.x])
            ys = np.concatenate([self.back_a[:-1], self.a])
        else:
            xs, ys = self.x, self.a
        out = np.interp(xq, xs, ys)
        return out if np.ndim(out) else float(out)


def _rk4(f, x0: float, y0: float, x1: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step classic Runge-Kutta from x0 to x1 (either direction)."""
    span = x1 - x0
    n = max(1, int(math.ceil(abs(span) / step - 1e-12)))
    h = span / n
    xs = x0 + h * np.arange(n + 1)
    ys = np.empty(n + 1)
    y = y0
    ys[0] = y
    for i in range(n):
        xi = xs[i]
        k1 = f(xi, y)
        k2 = f(xi + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(xi + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(xi + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[i + 1] = y
    return xs, ys


def solve_a_tilde(
    params: ModelParams,
    m: float,
    x_seed: float,
    x_end: float,
    step: float = 1e-3,
    seed_value: float | None = None,
    backward_to: float | None = None,
) -> TildeACurve:
    """Integrate the feedback ODE from a seed at x_seed forward to x_end.

    Default seed is the two-term large-x series limit + coeff / x_seed;
    when the dropped next order is not obviously negligible at x_seed a
    note is attached (and a warning emitted).  An optional backward leg to
    backward_to is supported but flagged: backward integration amplifies
    seed error, it is only useful for short spans.
    """
    p = params
    if x_seed <= 0 or x_end <= x_seed:
        raise ValueError("need 0 < x_seed < x_end")
    a0 = p.excess * m / p.sigma**2
    a1 = -(1.0 - p.lam / p.r) * p.excess * m * m / p.sigma**2
    note = None
    if seed_value is None:
        seed = a0 + a1 / x_seed
        rel_next = abs(a1) / (x_seed * x_seed * max(abs(a0), 1e-300))
        if rel_next >= 1e-3:
            note = (
                f"series seed at x={x_seed:g} drops a term of relative size "
                f"~{rel_next:.2e}; seed farther out or supply seed_value"
            )
            warnings.warn(note)
    else:
        seed = float(seed_value)

    def f(x, a):
        return a_tilde_rhs(x, a, p, m)

    xs, ys = _rk4(f, x_seed, seed, x_end, step)
    curve = TildeACurve(x=xs, a=ys, x_seed=x_seed, seed=seed, series=(a0, a1), seed_note=note)
    if backward_to is not None:
        if not 0 < backward_to < x_seed:
            raise ValueError("backward_to must sit in (0, x_seed)")
        bx, by = _rk4(f, x_seed, seed, backward_to, step)
        curve.back_x = bx[::-1].copy()
        curve.back_a = by[::-1].copy()
        curve.backward_warning = (
            "backward leg integrates against the stable direction; seed error "
            "grows exponentially toward 0"
        )
    return curve


@dataclass
class CurveSamples:
    """Plain sampled curve on a possibly offset (still uniform) abscissa."""

    x: np.ndarray
    values: np.ndarray

    def __call__(self, xq):
        out = np.interp(xq, self.x, self.values)
        return out if np.ndim(out) else float(out)


def reconstruct_vprime(curve: TildeACurve, params: ModelParams, anchor: tuple[float, float]) -> CurveSamples:
    """Rebuild the value slope from the feedback curve alone.

    V'(x) = V'(x0) * exp( -(mu-r)/sigma^2 * int_{x0}^x dy / a~(y) ),
    anchored at anchor = (x0, V'(x0)); x0 must lie inside the forward leg.
    """
    p = params
    x0, val0 = anchor
    xs = curve.x
    if not (xs[0] <= x0 <= xs[-1]):
        raise ValueError(f"anchor x0={x0!r} outside the curve range [{xs[0]}, {xs[-1]}]")
    if np.any(curve.a == 0.0):
        raise ValueError("feedback curve crosses zero; slope reconstruction undefined")
    integrand = 1.0 / curve.a
    I = cumulative_trapezoid(integrand, xs, initial=0.0)
    I0 = float(np.interp(x0, xs, I))
    vals = val0 * np.exp(-p.excess / p.sigma**2 * (I - I0))
    return CurveSamples(x=xs.copy(), values=vals)


@dataclass(frozen=True)
class LinearOdeCoeffs:
    """phi'' + (a2 x + a1) phi' + (a4 x + a3) phi = 0 for the constant-strategy slope."""

    A_rho2: float
    a1: float
    a2: float
    a3: float
    a4: float


def linear_ode_coeffs(params: ModelParams, A: float, m: float) -> LinearOdeCoeffs:
    """Coefficients of the linear slope ODE under strategy a = A, exponential claims.

    A = 0 is allowed (no investment, the perturbation diffusion remains).
    """
    p = params
    if A < 0:
        raise ValueError(f"constant strategy must be nonnegative, got {A!r}")
    k = 1.0 / m
    A_rho2 = p.quadratic_form(A)
    a1 = (2.0 * p.c + 2.0 * p.excess * A) / A_rho2 + k
    a2 = 2.0 * p.r / A_rho2
    a3 = 2.0 * ((p.r - p.lam) + k * p.c + k * A * p.excess) / A_rho2
    a4 = 2.0 * p.r * k / A_rho2
    return LinearOdeCoeffs(A_rho2=A_rho2, a1=a1, a2=a2, a3=a3, a4=a4)


def solve_linear_const_strategy(params: ModelParams, A: float, m: float, grid: Grid) -> ValueGrid:
    """Integrate the constant-strategy slope ODE across the grid.

    phi(0) = 1, phi'(0) = -2 (c + (mu-r) A) / A_rho2.  Implicit trapezoid
    on the first-order system: the stiff eigenvalue grows like -a2 x, which
    an explicit integrator cannot take across a long grid at a fixed step.
    Returns the same container the grid solvers use (windows empty,
    mode "constant_strategy").
    """
    co = linear_ode_coeffs(params, A, m)
    h = grid.h
    x = grid.points
    n = grid.n
    phi = np.empty(n)
    psi = np.empty(n)
    phi[0] = 1.0
    psi[0] = -2.0 * (params.c + params.excess * A) / co.A_rho2

    half_h = 0.5 * h
    for j in range(1, n):
        pj = co.a2 * x[j - 1] + co.a1
        qj = co.a4 * x[j - 1] + co.a3
        p1 = co.a2 * x[j] + co.a1
        q1 = co.a4 * x[j] + co.a3
        # rhs = (I + h/2 M_j) y_j with M = [[0, 1], [-q, -p]]
        r0 = phi[j - 1] + half_h * psi[j - 1]
        r1 = psi[j - 1] + half_h * (-qj * phi[j - 1] - pj * psi[j - 1])
        # solve (I - h/2 M_{j+1}) y = r, closed-form 2x2
        det = (1.0 + half_h * p1) + half_h * half_h * q1
        phi[j] = ((1.0 + half_h * p1) * r0 + half_h * r1) / det
        psi[j] = (-half_h * q1 * r0 + r1) / det

    V = cumulative_trapezoid(phi, dx=h, initial=0.0)
    return ValueGrid(grid=grid, v=phi, V=V, vprime=psi, windows=[], mode="constant_strategy", cap=A)
