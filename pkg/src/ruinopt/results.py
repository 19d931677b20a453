"""Solver output containers, survival normalization, and residual checks.

Both solvers produce the scaled value slope v = V'/V'(0-ish scale) with
v(0) = 1 on a uniform grid, plus its integral V.  The ruin probability
needs V(inf), which the grid never reaches; normalize_delta estimates the
missing tail mass and flags the cases where truncation actually matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .claims import ClaimDistribution
from .model import ModelParams
from .numerics import Grid, SampledFn, convolve_tail_all

__all__ = [
    "WindowDiagnostics",
    "ValueGrid",
    "StrategyCurve",
    "NormalizedSurvival",
    "normalize_delta",
    "generator_residual",
]


@dataclass
class WindowDiagnostics:
    """Per-window fixed-point iteration record."""

    first_index: int
    last_index: int
    x_start: float
    x_end: float
    iterations: int
    changes: list[float] = field(default_factory=list)

    @property
    def contraction_ratios(self) -> list[float]:
        """Successive sup-change ratios; skipped where the previous change is 0."""
        out = []
        for prev, cur in zip(self.changes, self.changes[1:]):
            if prev > 0.0:
                out.append(cur / prev)
        return out


@dataclass
class ValueGrid:
    """Scaled value slope v, its integral V, and solve diagnostics."""

    grid: Grid
    v: np.ndarray
    V: np.ndarray
    vprime: np.ndarray
    windows: list[WindowDiagnostics]
    mode: str
    cap: float | None = None
    argmin: np.ndarray | None = None  # per-node minimizing investment (capped solve)

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    def slope_fn(self) -> SampledFn:
        return SampledFn(self.grid, self.v)

    def value_fn(self) -> SampledFn:
        return SampledFn(self.grid, self.V)


@dataclass
class StrategyCurve:
    """Optimal investment sampled on a grid, with optional range and tail.

    Outside the grid the curve holds its end value, unless `tail` supplies
    a large-surplus expansion (limit, coeff), in which case queries beyond
    the grid evaluate limit + coeff / x.
    """

    grid: Grid
    values: np.ndarray
    lo: float | None = None
    hi: float | None = None
    tail: tuple[float, float] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError("strategy values do not match the grid")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.grid.points, self.values)
        if self.tail is not None:
            limit, coeff = self.tail
            beyond = x > self.grid.x_max
            if np.any(beyond):
                ext = limit + coeff / np.where(beyond, x, 1.0)
                if self.lo is not None or self.hi is not None:
                    ext = np.clip(ext, self.lo, self.hi)
                out = np.where(beyond, ext, out)
        return out if out.ndim else float(out)

    __call__ = value


@dataclass
class NormalizedSurvival:
    """Ruin-scale normalization of a solved value grid.

    delta(x) approximates V(x) / V(inf): the survival advantage of starting
    at x, with delta(0) = 0 and delta -> 1.  tail_remainder is the estimated
    integral of v beyond the grid; truncated flags remainders over 1% of
    V(x_max), meaning the grid should have been longer.
    """

    delta: SampledFn
    v_inf_hat: float
    tail_remainder: float
    tail_slope: float | None
    truncated: bool

    def ruin_probability(self, x):
        return 1.0 - self.delta(x)


def normalize_delta(vg: ValueGrid, claim_mean: float | None = None) -> NormalizedSurvival:
    """Estimate V(inf) and rescale V to the survival probability delta.

    With an exponential claim mean m the remainder integral is exactly
    m * v(x_max) in the large-x limit; otherwise the log-slope of v over
    the last tenth of the grid extrapolates a geometric tail.
    """
    grid = vg.grid
    v_end = float(vg.v[-1])
    V_end = float(vg.V[-1])
    slope = None
    if claim_mean is not None:
        remainder = float(claim_mean) * v_end
    else:
        j0 = int(math.floor(0.9 * (grid.n - 1)))
        j0 = min(max(j0, 0), grid.n - 2)
        xs = grid.points[j0:]
        vs = vg.v[j0:]
        if np.all(vs > 0.0):
            coeffs = np.polyfit(xs, np.log(vs), 1)
            slope = -float(coeffs[0])
        if slope is not None and slope > 0.0 and v_end > 0.0:
            remainder = v_end / slope
        else:
            # tail is not decaying on the grid; remainder unknown, flag it
            remainder = math.inf
    truncated = not (remainder <= 0.01 * V_end)
    v_inf = V_end + remainder
    if math.isfinite(v_inf) and v_inf > 0.0:
        delta_vals = vg.V / v_inf
    else:
        delta_vals = np.zeros_like(vg.V)
    return NormalizedSurvival(
        delta=SampledFn(grid, delta_vals),
        v_inf_hat=v_inf,
        tail_remainder=remainder,
        tail_slope=slope,
        truncated=truncated,
    )


def generator_residual(
    vg: ValueGrid,
    strategy: np.ndarray | StrategyCurve,
    params: ModelParams,
    dist: ClaimDistribution,
) -> tuple[np.ndarray, float, float]:
    """Pointwise residual of the controlled generator applied to V.

    Evaluates 0.5 Q(a) V'' + (c + (mu-r) a + r x) V' - M(V) at each interior
    node with a centered finite difference for V'' = v', so the check is
    independent of how the solver represented the curvature.  The claims
    term M(V) uses the density form when the density is bounded at 0 and
    the tail-convolution form otherwise.  Returns (residuals, sup, x_at_sup)
    with NaN at the two endpoint nodes where the stencil does not exist.
    """
    grid = vg.grid
    x = grid.points
    h = grid.h
    n = grid.n
    a = strategy.values if isinstance(strategy, StrategyCurve) else np.asarray(strategy, dtype=float)
    if a.shape != (n,):
        raise ValueError("strategy samples do not match the solver grid")

    vpp = np.full(n, np.nan)
    vpp[1:-1] = (vg.v[2:] - vg.v[:-2]) / (2.0 * h)

    f0 = float(dist.pdf(0.0))
    if math.isfinite(f0):
        conv = convolve_tail_all(vg.V, dist.pdf(x), h)
        M = params.lam * (vg.V - conv)
    else:
        # unbounded density at 0 (e.g. small-shape Weibull): integrate by
        # parts against the bounded tail instead
        M = params.lam * convolve_tail_all(vg.v, dist.tail(x), h)

    Q = params.quadratic_form(a)
    P = params.c + params.excess * a + params.r * x
    res = 0.5 * Q * vpp + P * vg.v - M
    res[0] = np.nan
    res[-1] = np.nan
    interior = res[1:-1]
    k = int(np.argmax(np.abs(interior)))
    return res, float(abs(interior[k])), float(x[k + 1])
