"""Refinement checks of the transformation and wall-trace identities.

Each check evaluates both sides of one of the algebraic identities behind
the transformed-vorticity system on a closed-form flow family, with
exactly one finite-difference layer on each side, so the residual decays
at second order: halving the mesh divides the max residual by about four.
The identities are pure calculus (they do not assume the family solves
the flow equations), which is what makes them checkable on closed forms.
"""

import math
from dataclasses import dataclass

import numpy as np

from prandtl.calculus import Field, dy
from prandtl.grid import Grid, MultiIndex, build_grid

IDENTITY_NAMES = (
    "second_y",         # quotient transform of a second y-derivative
    "time",             # quotient transform of a time derivative
    "x",                # quotient transform of an x-derivative
    "trace_recursion",  # wall recursion lowering one y-derivative
    "quotient_second",  # wall second-derivative trace identity
    "wall_flux",        # wall balance of the vorticity-gradient flux
)


@dataclass(frozen=True)
class SeparableFamily:
    """Closed-form flow with two decay scales in y and distinct time rates.

        u = (2 + sin(2 pi x/L)) [ e^{0.5 t}
                                  - 3/4 e^{0.35 t} (1+y)^-2
                                  - 1/4 e^{0.2 t}  (1+y)^-3 ],

    far field U = (2 + sin) e^{0.5 t}.  The mixed scales matter: with a
    single y-scale the quotients (u-U)/u_y degenerate to linear functions
    of y and the difference stencils become exact on them; with a single
    time rate u_yt/u_y is y-constant and the time identity collapses to
    0 = 0.  Two algebraic tails with three distinct rates keep every
    identity, in every direction, nontrivially curved.
    """

    x_period: float = 2.0 * math.pi
    far_rate: float = 0.5
    tails: tuple = ((0.75, 2.0, 0.35), (0.25, 3.0, 0.2))

    def _xfac(self, n_x: int, x: np.ndarray) -> np.ndarray:
        k = 2.0 * math.pi / self.x_period
        if n_x == 0:
            return 2.0 + np.sin(k * x)
        return k**n_x * np.sin(k * x + n_x * math.pi / 2.0)

    @staticmethod
    def _power(n_y: int, q: float, y: np.ndarray) -> np.ndarray:
        coef = math.prod(-(q + m) for m in range(n_y)) if n_y else 1.0
        return coef * (1.0 + y) ** (-(q + n_y))

    def _ypart(self, n_t: int, n_y: int, t: float, y: np.ndarray,
               with_far: bool) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        if with_far and n_y == 0:
            out = out + self.far_rate**n_t * math.exp(self.far_rate * t)
        for c, q, r in self.tails:
            out = out - c * r**n_t * math.exp(r * t) * self._power(n_y, q, y)
        return out

    def du(self, n_t: int, n_x: int, n_y: int, t: float, x, y) -> np.ndarray:
        return np.outer(self._xfac(n_x, np.atleast_1d(x)),
                        self._ypart(n_t, n_y, t, np.atleast_1d(y), with_far=True))

    def d_far(self, n_t: int, n_x: int, t: float, x) -> np.ndarray:
        return self.far_rate**n_t * math.exp(self.far_rate * t) * self._xfac(
            n_x, np.atleast_1d(x)
        )

    def dtilde(self, n_t: int, n_x: int, n_y: int, t: float, x, y) -> np.ndarray:
        return np.outer(self._xfac(n_x, np.atleast_1d(x)),
                        self._ypart(n_t, n_y, t, np.atleast_1d(y), with_far=False))

    def dv(self, n_t: int, n_x: int, n_y: int, t: float, x, y) -> np.ndarray:
        """Derivatives of v = -int_0^y du/dx: closed via the y-antiderivative."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if n_y == 0:
            ypart = self.far_rate**n_t * math.exp(self.far_rate * t) * y
            for c, q, r in self.tails:
                anti = (1.0 - (1.0 + y) ** (1.0 - q)) / (q - 1.0)
                ypart = ypart - c * r**n_t * math.exp(r * t) * anti
        else:
            ypart = self._ypart(n_t, n_y - 1, t, y, with_far=(n_y == 1))
        return -np.outer(self._xfac(n_x + 1, np.atleast_1d(x)), ypart)


def _wall_dy(values: np.ndarray, hy: float) -> np.ndarray:
    """One-sided second-order first derivative on the wall row."""
    return (-3.0 * values[:, 0] + 4.0 * values[:, 1] - values[:, 2]) / (2.0 * hy)


def _wall_dyy(values: np.ndarray, hy: float) -> np.ndarray:
    """One-sided second-order second derivative on the wall row."""
    return (
        2.0 * values[:, 0] - 5.0 * values[:, 1] + 4.0 * values[:, 2] - values[:, 3]
    ) / hy**2


def _shear(fam: SeparableFamily, t: float, grid: Grid):
    u_y = fam.du(0, 0, 1, t, grid.x, grid.y)
    u_yy = fam.du(0, 0, 2, t, grid.x, grid.y)
    u_yyy = fam.du(0, 0, 3, t, grid.x, grid.y)
    return u_y, u_yy, u_yyy


def _transform_closed(fam: SeparableFamily, idx: MultiIndex, t: float,
                      grid: Grid) -> np.ndarray:
    """Closed form of the shear-quotient transform (tangential idx)."""
    u_y, u_yy, _ = _shear(fam, t, grid)
    d_om = fam.du(idx.n_t, idx.n_x, 1, t, grid.x, grid.y)
    d_tilde = fam.dtilde(idx.n_t, idx.n_x, 0, t, grid.x, grid.y)
    return d_om - d_tilde * (u_yy / u_y)


def identity_residual(name: str, grid: Grid, t: float = 0.3,
                      idx: MultiIndex = MultiIndex(1, 1, 0),
                      fam: SeparableFamily | None = None) -> float:
    """Max residual of one identity on the given grid (interior or wall)."""
    fam = fam or SeparableFamily(x_period=grid.x_period)
    if fam.x_period != grid.x_period:
        raise ValueError("family period must match the grid")
    x, y, hy = grid.x, grid.y, grid.hy
    u_y, u_yy, u_yyy = _shear(fam, t, grid)
    q = u_yy / u_y

    if name in ("second_y", "time", "x"):
        # u_y d/dy (D tilde / u_y) for D in {d_yy, d_t, d_x} against its
        # expanded form in terms of the transform.
        w = _transform_closed(fam, idx, t, grid)
        tilde = fam.dtilde(idx.n_t, idx.n_x, 0, t, x, y)
        if name == "second_y":
            inner = fam.dtilde(idx.n_t, idx.n_x, 2, t, x, y)
            w_yy = dy(Field(grid, w), 2).values
            rhs = (
                w_yy
                + (u_yyy / u_y - 2.0 * q**2) * w
                + u_y * dy(Field(grid, (tilde / u_y) * (u_yyy / u_y)), 1).values
            )
        elif name == "time":
            inner = fam.dtilde(idx.n_t + 1, idx.n_x, 0, t, x, y)
            u_yt = fam.du(1, 0, 1, t, x, y)
            w_t = _d_transform_tangent(fam, idx, t, grid, "t")
            rhs = (
                w_t
                - (u_yt / u_y) * w
                + u_y * dy(Field(grid, (tilde / u_y) * (u_yt / u_y)), 1).values
            )
        else:
            inner = fam.dtilde(idx.n_t, idx.n_x + 1, 0, t, x, y)
            u_yx = fam.du(0, 1, 1, t, x, y)
            w_x = _d_transform_tangent(fam, idx, t, grid, "x")
            rhs = (
                w_x
                - (u_yx / u_y) * w
                + u_y * dy(Field(grid, (tilde / u_y) * (u_yx / u_y)), 1).values
            )
        lhs = u_y * dy(Field(grid, inner / u_y), 1).values
        # Fixed evaluation band: a node-index window would slide toward the
        # wall under refinement and drag the error coefficient with it.
        band = (grid.y >= 0.5) & (grid.y <= 0.75 * grid.y_max)
        return float(np.max(np.abs(lhs - rhs)[:, band]))

    if name == "trace_recursion":
        # d_t d^a d_y u = W[a+(1,0)] + d_t d^a (u - U) u_yy/u_y on the wall,
        # with the transform taken through the one-sided quotient stencil.
        lhs = fam.du(idx.n_t + 1, idx.n_x, 1, t, x, y)[:, 0]
        tilde_t = fam.dtilde(idx.n_t + 1, idx.n_x, 0, t, x, y)
        w_fd = (u_y * _wall_dy_full(tilde_t / u_y, hy))[:, 0]
        rhs = w_fd + tilde_t[:, 0] * q[:, 0]
        return float(np.max(np.abs(lhs - rhs)))

    if name == "quotient_second":
        # d_yy(d^a omega) = d/dy W[a,1] + q W[a,1] + d^a(omega) u_yyy/u_y
        # on the wall; the left side carries the one FD layer.
        om_tan = fam.du(idx.n_t, idx.n_x, 1, t, x, y)
        lhs = _wall_dyy(om_tan, hy)
        w_a1 = fam.du(idx.n_t, idx.n_x, 2, t, x, y) - om_tan * q
        w_a1_y = _d_w_sigma1_y(fam, idx, t, grid)
        rhs = w_a1_y[:, 0] + q[:, 0] * w_a1[:, 0] + om_tan[:, 0] * (u_yyy / u_y)[:, 0]
        return float(np.max(np.abs(lhs - rhs)))

    if name == "wall_flux":
        # d/dy (u_t + u u_x + v u_y) = u_yt + u u_yx on the wall (v(0) = 0
        # and v_y = -u_x make the cross terms cancel).
        u = fam.du(0, 0, 0, t, x, y)
        combo = (
            fam.du(1, 0, 0, t, x, y)
            + u * fam.du(0, 1, 0, t, x, y)
            + fam.dv(0, 0, 0, t, x, y) * u_y
        )
        lhs = _wall_dy(combo, hy)
        rhs = (fam.du(1, 0, 1, t, x, y) + u * fam.du(0, 1, 1, t, x, y))[:, 0]
        return float(np.max(np.abs(lhs - rhs)))

    raise ValueError(f"unknown identity {name!r}; pick from {IDENTITY_NAMES}")


def _wall_dy_full(values: np.ndarray, hy: float) -> np.ndarray:
    out = np.empty_like(values)
    out[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * hy)
    out[:, 0] = (-3.0 * values[:, 0] + 4.0 * values[:, 1] - values[:, 2]) / (2.0 * hy)
    out[:, -1] = (3.0 * values[:, -1] - 4.0 * values[:, -2] + values[:, -3]) / (2.0 * hy)
    return out


def _d_transform_tangent(fam: SeparableFamily, idx: MultiIndex, t: float,
                         grid: Grid, direction: str) -> np.ndarray:
    """Exact t- or x-derivative of the closed-form transform."""
    x, y = grid.x, grid.y
    u_y, u_yy, u_yyy = _shear(fam, t, grid)
    d_om = fam.du(idx.n_t, idx.n_x, 1, t, x, y)
    tilde = fam.dtilde(idx.n_t, idx.n_x, 0, t, x, y)
    q = u_yy / u_y
    if direction == "t":
        d_om_d = fam.du(idx.n_t + 1, idx.n_x, 1, t, x, y)
        tilde_d = fam.dtilde(idx.n_t + 1, idx.n_x, 0, t, x, y)
        u_y_d = fam.du(1, 0, 1, t, x, y)
        u_yy_d = fam.du(1, 0, 2, t, x, y)
    else:
        d_om_d = fam.du(idx.n_t, idx.n_x + 1, 1, t, x, y)
        tilde_d = fam.dtilde(idx.n_t, idx.n_x + 1, 0, t, x, y)
        u_y_d = fam.du(0, 1, 1, t, x, y)
        u_yy_d = fam.du(0, 1, 2, t, x, y)
    q_d = (u_yy_d * u_y - u_yy * u_y_d) / u_y**2
    return d_om_d - tilde_d * q - tilde * q_d


def _d_w_sigma1_y(fam: SeparableFamily, idx: MultiIndex, t: float,
                  grid: Grid) -> np.ndarray:
    """Exact y-derivative of W[a,1] = d^a u_yy - d^a u_y * (u_yy/u_y)."""
    x, y = grid.x, grid.y
    u_y, u_yy, u_yyy = _shear(fam, t, grid)
    q = u_yy / u_y
    q_y = (u_yyy * u_y - u_yy**2) / u_y**2
    a_yyy = fam.du(idx.n_t, idx.n_x, 3, t, x, y)
    a_yy = fam.du(idx.n_t, idx.n_x, 2, t, x, y)
    a_y = fam.du(idx.n_t, idx.n_x, 1, t, x, y)
    return a_yyy - a_yy * q - a_y * q_y


def refinement_study(name: str, levels: int = 3, base: tuple[int, int] = (16, 65),
                     y_max: float = 6.0, idx: MultiIndex = MultiIndex(1, 1, 0)) -> dict:
    """Residuals and successive ratios under simultaneous (hx, hy) halving."""
    residuals = []
    nx, ny = base
    for k in range(levels + 1):
        grid = build_grid(nx * 2**k, (ny - 1) * 2**k + 1, 2.0 * math.pi, y_max)
        residuals.append(identity_residual(name, grid, idx=idx))
    ratios = [a / b for a, b in zip(residuals, residuals[1:])]
    return {"name": name, "residuals": residuals, "ratios": ratios}


def run_identity_suite(levels: int = 3) -> list[dict]:
    """All identity refinement studies in a fixed order."""
    return [refinement_study(name, levels=levels) for name in IDENTITY_NAMES]
