"""Computational domain, spatial weights, and quadrature.

The domain is x-periodic on [0, L_x) and truncated in the wall-normal
direction to [0, Y].  Node layout is uniform in both directions with the
wall exactly at y_0 = 0.  Everything downstream (norms, energy records,
residuals) integrates with the rules defined here, in fixed index order,
so repeated runs are bit-identical.
"""

from dataclasses import dataclass, field

import numpy as np

# Weighted tail contribution (1+Y)^(ell-theta) above this is only reported,
# not fatal: the truncated tail shows up explicitly in every norm check.
DEFAULT_TAIL_TOL = 1e-6


@dataclass(frozen=True)
class Grid:
    """Uniform tensor mesh: x_i = i*hx (periodic), y_j = j*hy, y_0 = 0."""

    nx: int
    ny: int
    x_period: float
    y_max: float
    hx: float = field(init=False)
    hy: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False)
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "hx", self.x_period / self.nx)
        object.__setattr__(self, "hy", self.y_max / (self.ny - 1))
        object.__setattr__(self, "x", self.hx * np.arange(self.nx))
        object.__setattr__(self, "y", self.hy * np.arange(self.ny))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)


def build_grid(nx: int, ny: int, x_period: float, y_max: float) -> Grid:
    """Construct a grid, rejecting degenerate or non-finite dimensions."""
    if not (np.isfinite(x_period) and np.isfinite(y_max)):
        raise ValueError("grid dimensions must be finite")
    if nx < 8 or ny < 8:
        raise ValueError(f"grid too coarse: nx={nx}, ny={ny} (need >= 8 each)")
    if x_period <= 0 or y_max <= 0:
        raise ValueError(f"grid dimensions must be positive: L_x={x_period}, Y={y_max}")
    return Grid(nx=int(nx), ny=int(ny), x_period=float(x_period), y_max=float(y_max))


@dataclass(frozen=True)
class WeightParams:
    """Weight exponent ell, initial vorticity decay theta, derivative cap.

    theta > (ell+1)/2 keeps the two-sided decay envelope compatible with
    the weighted norms; all multi-indices used satisfy |order| <= k_max.
    """

    ell: float = 1.5
    theta: float = 3.0
    k_max: int = 2

    def __post_init__(self):
        if not self.ell > 1:
            raise ValueError(f"weight exponent ell must exceed 1, got {self.ell}")
        if not self.theta > (self.ell + 1) / 2:
            raise ValueError(
                f"decay exponent theta={self.theta} must exceed (ell+1)/2={(self.ell + 1) / 2}"
            )
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Derivative counts (n_t, n_x, n_y) for mixed-derivative diagnostics."""

    n_t: int = 0
    n_x: int = 0
    n_y: int = 0

    def __post_init__(self):
        if min(self.n_t, self.n_x, self.n_y) < 0:
            raise ValueError("derivative counts must be nonnegative")

    @property
    def tangential(self) -> int:
        """Order in the (t, x) directions."""
        return self.n_t + self.n_x

    @property
    def total(self) -> int:
        return self.n_t + self.n_x + self.n_y

    def label(self) -> str:
        return f"t{self.n_t}x{self.n_x}y{self.n_y}"


def index_family(k: int) -> list[MultiIndex]:
    """All multi-indices with total order <= k, in a fixed deterministic order."""
    out = []
    for total in range(k + 1):
        for n_t in range(total + 1):
            for n_x in range(total - n_t + 1):
                out.append(MultiIndex(n_t, n_x, total - n_t - n_x))
    return out


def weight(y, exponent: float):
    """The spatial weight (1+y)**exponent; accepts scalars or arrays."""
    return (1.0 + np.asarray(y, dtype=float)) ** exponent


def trapezoid_weights(grid: Grid) -> np.ndarray:
    """Quadrature weights in y (trapezoid), shape (ny,)."""
    w = np.full(grid.ny, grid.hy)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def quadrature_2d(values: np.ndarray, grid: Grid) -> float:
    """Integral over [0,L_x) x [0,Y]: rectangle rule in x, trapezoid in y.

    Exact for integrands affine in y and constant in x; second order on
    smooth decaying integrands.  Accumulates in fixed index order.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
    if np.isnan(values).any():
        raise ValueError("quadrature input contains NaN")
    wy = trapezoid_weights(grid)
    return float(grid.hx * np.sum(values @ wy))


def tail_report(params: WeightParams, grid: Grid, tol: float = DEFAULT_TAIL_TOL) -> dict:
    """Size of the truncated weighted vorticity tail above y = Y.

    For a tail ~ (1+y)^(-theta) under the (1+y)^ell weight the leftover
    scales like (1+Y)^(ell-theta).  Large values mean the truncation is
    visible in weighted norms; this is reported, never fatal.
    """
    measure = float((1.0 + grid.y_max) ** (params.ell - params.theta))
    return {
        "tail_measure": measure,
        "tail_tol": tol,
        "within_tol": bool(measure <= tol),
    }
