"""Finite-difference kernel shared by the solver and all diagnostics.

Fields live on a Grid as (nx, ny) arrays.  Stencils: centered second order
in x (periodic), centered second order in y with one-sided second-order
rows at the wall and the top, backward differences in time built from a
stored window of levels.  The vertical velocity is reconstructed from
incompressibility by cumulative integration from the wall.
"""

import math
from dataclasses import dataclass

import numpy as np

from prandtl.grid import Grid, MultiIndex

MAX_SPATIAL_ORDER = 4


@dataclass
class Field:
    """A scalar sample on the grid: values[i, j] at (x_i, y_j)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def full(cls, grid: Grid, fill: float = 0.0) -> "Field":
        return cls(grid, np.full(grid.shape, float(fill)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        xx, yy = np.meshgrid(grid.x, grid.y, indexing="ij")
        return cls(grid, np.asarray(fn(xx, yy), dtype=float))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def wall(self) -> np.ndarray:
        """Trace at y = 0, shape (nx,)."""
        return self.values[:, 0]


def _dx_once(values: np.ndarray, hx: float) -> np.ndarray:
    return (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2.0 * hx)


def _dy_once(values: np.ndarray, hy: float) -> np.ndarray:
    out = np.empty_like(values)
    out[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * hy)
    out[:, 0] = (-3.0 * values[:, 0] + 4.0 * values[:, 1] - values[:, 2]) / (2.0 * hy)
    out[:, -1] = (3.0 * values[:, -1] - 4.0 * values[:, -2] + values[:, -3]) / (2.0 * hy)
    return out


def dx(f: Field, order: int = 1) -> Field:
    """Periodic centered x-derivative applied `order` times."""
    if not 1 <= order <= MAX_SPATIAL_ORDER:
        raise ValueError(f"x-derivative order must be in [1, {MAX_SPATIAL_ORDER}]")
    v = f.values
    for _ in range(order):
        v = _dx_once(v, f.grid.hx)
    return Field(f.grid, v)


def dy(f: Field, order: int = 1) -> Field:
    """y-derivative applied `order` times; one-sided second order at j=0, ny-1."""
    if not 1 <= order <= MAX_SPATIAL_ORDER:
        raise ValueError(f"y-derivative order must be in [1, {MAX_SPATIAL_ORDER}]")
    v = f.values
    for _ in range(order):
        v = _dy_once(v, f.grid.hy)
    return Field(f.grid, v)


def backward_weights(order: int, n_points: int, dt: float) -> np.ndarray:
    """Backward-difference weights for d^order/dt^order at the newest level.

    Weights w[k] multiply u(t - k*dt), k = 0..n_points-1.  Exact on
    polynomials of degree < n_points, so n_points = order+1 is first-order
    accurate and order+2 is second-order accurate.
    """
    if n_points <= order:
        raise ValueError("need at least order+1 points")
    # Solve the moment system sum_k w_k (-k)^m = order! * delta_{m,order} / dt^order.
    k = np.arange(n_points, dtype=float)
    vander = np.vander(-k, n_points, increasing=True).T  # rows: moments m
    rhs = np.zeros(n_points)
    rhs[order] = float(math.factorial(order))
    w = np.linalg.solve(vander, rhs)
    return w / dt**order


class FlowHistory:
    """Rolling window of (time, Field) levels with uniform spacing.

    Newest level last.  Time stencils of derivative order m need at least
    m+1 levels; one extra level upgrades them to second order.
    """

    def __init__(self, capacity: int):
        if capacity < 2:
            raise ValueError("history capacity must be >= 2")
        self.capacity = capacity
        self.times: list[float] = []
        self.levels: list[Field] = []

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def dt(self) -> float:
        if len(self.times) < 2:
            raise ValueError("history has no time spacing yet")
        return self.times[1] - self.times[0]

    @property
    def latest(self) -> Field:
        return self.levels[-1]

    @property
    def latest_time(self) -> float:
        return self.times[-1]

    def push(self, t: float, f: Field) -> None:
        if self.times:
            step = t - self.times[-1]
            if step <= 0:
                raise ValueError("history times must be strictly increasing")
            if len(self.times) >= 2:
                if abs(step - self.dt) > 1e-12 * max(1.0, abs(self.dt)):
                    raise ValueError("history requires uniform time spacing")
        self.times.append(float(t))
        self.levels.append(f)
        if len(self.levels) > self.capacity:
            self.times.pop(0)
            self.levels.pop(0)

    @classmethod
    def from_levels(cls, times, fields) -> "FlowHistory":
        h = cls(capacity=max(2, len(fields)))
        for t, f in zip(times, fields):
            h.push(t, f)
        return h


def dt_stencil(history: FlowHistory, order: int) -> Field:
    """Backward time derivative of the given order at the newest level.

    Uses order+2 levels (second-order accurate) when available, else the
    minimal order+1 levels (first order).
    """
    if order < 1:
        raise ValueError("time-derivative order must be >= 1")
    have = len(history)
    need = order + 1
    if have < need:
        raise ValueError(
            f"time stencil of order {order} needs a window of >= {need} levels, have {have}"
        )
    n_points = min(order + 2, have)
    w = backward_weights(order, n_points, history.dt)
    acc = np.zeros_like(history.latest.values)
    for k in range(n_points):
        acc += w[k] * history.levels[-1 - k].values
    return Field(history.latest.grid, acc)


def reconstruct_v(u: Field) -> Field:
    """Vertical velocity from incompressibility: v = -int_0^y du/dx dy'.

    Cumulative trapezoid from the wall, so v(x, 0) = 0 exactly and
    dy(v) + dx(u) = O(h^2) in the interior.
    """
    ux = dx(u, 1).values
    hy = u.grid.hy
    v = np.zeros_like(ux)
    incr = 0.5 * hy * (ux[:, 1:] + ux[:, :-1])
    v[:, 1:] = -np.cumsum(incr, axis=1)
    return Field(u.grid, v)


def shift_history(history: FlowHistory, transform) -> FlowHistory:
    """Apply a (t, Field) -> Field map to each stored level."""
    out = FlowHistory(capacity=history.capacity)
    for t, f in zip(history.times, history.levels):
        out.push(t, transform(t, f))
    return out


def mixed_derivative(history: FlowHistory, idx: MultiIndex) -> Field:
    """Apply d/dt^{n_t}, then d/dx^{n_x}, then d/dy^{n_y} at the newest level.

    The application order is fixed for rounding determinism; the stencils
    commute analytically.  The caller is responsible for differentiating
    the right quantity (e.g. push u - U levels to take far-field-adjusted
    derivatives).
    """
    if idx.n_t > 0:
        f = dt_stencil(history, idx.n_t)
    else:
        f = history.latest
    if idx.n_x > 0:
        f = dx(f, idx.n_x)
    if idx.n_y > 0:
        f = dy(f, idx.n_y)
    return f
