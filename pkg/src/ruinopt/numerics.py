"""Uniform grids, trapezoid convolution quadrature, and prefix integration.

All solver quadrature lives here: the uniform grid x_j = j*h, the tail
convolution int_0^x H(y) w(x-y) dy, the claims (jump) operator, and
cumulative trapezoid integration.  Trapezoid rule everywhere: the solvers
need each new endpoint value from already-known history in one O(j) pass,
and integrands can have kinks at window joints, so a higher-order rule
buys nothing reliable here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = [
    "Grid",
    "SampledFn",
    "convolve_tail",
    "convolve_tail_all",
    "jump_operator_M",
    "integrate_prefix",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid x_j = j*h, j = 0..n-1."""

    h: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"grid step h must be positive and finite, got {self.h!r}")
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 points, got n={self.n!r}")

    @classmethod
    def from_xmax(cls, h: float, x_max: float) -> "Grid":
        if not x_max > 0:
            raise ValueError(f"x_max must be positive, got {x_max!r}")
        return cls(float(h), int(round(x_max / h)) + 1)

    @property
    def points(self) -> np.ndarray:
        # exact j*h (not linspace): spacing stays uniform to the last bit
        return self.h * np.arange(self.n)

    @property
    def x_max(self) -> float:
        return self.h * (self.n - 1)

    def index_at(self, x: float) -> int:
        """Nearest grid index for a coordinate inside the grid."""
        j = int(round(x / self.h))
        if j < 0 or j >= self.n:
            raise IndexError(f"x={x!r} outside grid [0, {self.x_max!r}]")
        return j


@dataclass
class SampledFn:
    """Function sampled on a grid; piecewise-linear between nodes."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid n={self.grid.n}"
            )

    def __call__(self, x):
        # np.interp clamps outside the grid; callers wanting a different
        # extrapolation rule handle it themselves
        return np.interp(x, self.grid.points, self.values)

    def __len__(self):
        return self.grid.n


def _tail_samples(tail, grid: Grid, upto: int) -> np.ndarray:
    if callable(tail):
        return np.asarray(tail(grid.points[:upto]), dtype=float)
    arr = np.asarray(tail, dtype=float)
    if arr.shape[0] < upto:
        raise ValueError("tail sample array shorter than required grid range")
    return arr[:upto]


def convolve_tail(w: SampledFn, tail, j: int) -> float:
    """Trapezoid approximation of int_0^{x_j} H(y) w(x_j - y) dy.

    `tail` is either a callable H(y) or an array of H sampled on the grid.
    Exact zero at j = 0 (empty integral).
    """
    if j < 0 or j >= w.grid.n:
        raise IndexError(f"index {j} out of range for grid of {w.grid.n} points")
    if j == 0:
        return 0.0
    H = _tail_samples(tail, w.grid, j + 1)
    seg = H * w.values[j::-1]
    return w.grid.h * (seg.sum() - 0.5 * (seg[0] + seg[-1]))


def convolve_tail_all(w_values: np.ndarray, tail_values: np.ndarray, h: float) -> np.ndarray:
    """Trapezoid int_0^{x_j} H(y) w(x_j - y) dy for every j in one pass."""
    w_values = np.asarray(w_values, dtype=float)
    tail_values = np.asarray(tail_values, dtype=float)
    n = w_values.shape[0]
    raw = np.convolve(tail_values[:n], w_values)[:n]
    out = h * (raw - 0.5 * tail_values[0] * w_values - 0.5 * tail_values[:n] * w_values[0])
    out[0] = 0.0
    return out


def jump_operator_M(W: SampledFn, f, lam: float, j: int) -> float:
    """Claims operator lam * [W(x_j) - int_0^{x_j} W(x_j - s) f(s) ds].

    Requires W(0) = 0.  The integral uses the continuous claim density f
    on the grid nodes (trapezoid); distributions with an unbounded density
    at 0 cannot go through this form, use the tail convolution instead.
    Non-negative (up to quadrature error) whenever W is non-decreasing.
    """
    if j < 0 or j >= W.grid.n:
        raise IndexError(f"index {j} out of range for grid of {W.grid.n} points")
    if j == 0:
        return 0.0
    s = W.grid.points[: j + 1]
    fv = np.asarray(f(s), dtype=float) if callable(f) else np.asarray(f, dtype=float)[: j + 1]
    seg = W.values[j::-1] * fv
    integral = W.grid.h * (seg.sum() - 0.5 * (seg[0] + seg[-1]))
    return lam * (W.values[j] - integral)


def integrate_prefix(w: SampledFn) -> SampledFn:
    """Cumulative trapezoid integral W(x_j) = int_0^{x_j} w; W(0) = 0."""
    vals = cumulative_trapezoid(w.values, dx=w.grid.h, initial=0.0)
    return SampledFn(w.grid, vals)
