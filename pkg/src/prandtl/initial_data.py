"""Compatible initial data for the Robin and no-slip wall problems.

The generator is separable: u0(x, y) = U(0, x) * g(y) with

    g(y) = 1 - (a / (theta - 1)) * (1 + y)^(1 - theta),
    g'(y) = a * (1 + y)^(-theta) > 0,

so the vorticity decays like an exact power law and the wall condition
holds analytically: the Robin balance g'(0) = beta * g(0) fixes
a = beta (theta-1) / (theta-1+beta), while no-slip g(0) = 0 fixes
a = theta - 1 (the beta -> infinity limit of the former).
"""

import math
from dataclasses import dataclass

import numpy as np

from prandtl.calculus import Field
from prandtl.euler import EulerData
from prandtl.grid import Grid, WeightParams, quadrature_2d, weight

DIRICHLET = math.inf


@dataclass(frozen=True)
class InitialDataSpec:
    """Decay exponent, target smallness amplitude, and wall parameter.

    beta = math.inf selects the no-slip (Dirichlet) branch.
    """

    theta: float = 3.0
    epsilon: float = 0.01
    beta: float = 50.0

    def __post_init__(self):
        if self.theta <= 1:
            raise ValueError("theta must exceed 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive (use math.inf for no-slip)")

    @property
    def dirichlet(self) -> bool:
        return math.isinf(self.beta)


def slope_coefficient(spec: InitialDataSpec) -> float:
    """The construction parameter a fixing the wall balance."""
    if spec.dirichlet:
        return spec.theta - 1.0
    return spec.beta * (spec.theta - 1.0) / (spec.theta - 1.0 + spec.beta)


@dataclass
class InitialData:
    """Generated data plus the analytic pieces validation relies on."""

    spec: InitialDataSpec
    u0: Field
    omega0: Field          # exact d u0 / dy
    omega0_y: Field        # exact d^2 u0 / dy^2
    slope: float           # the coefficient a
    c1: float              # lower sandwich constant
    c2: float              # upper sandwich constant


def profile(spec: InitialDataSpec, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(g, g', g'') on the given y nodes."""
    a = slope_coefficient(spec)
    th = spec.theta
    g = 1.0 - (a / (th - 1.0)) * (1.0 + y) ** (1.0 - th)
    gp = a * (1.0 + y) ** (-th)
    gpp = -a * th * (1.0 + y) ** (-th - 1.0)
    return g, gp, gpp


def make_initial_data(spec: InitialDataSpec, euler: EulerData, grid: Grid) -> InitialData:
    """Build u0 = U(0, .) g(y); rejects specs outside the monotone regime.

    The profile is renormalized by g(Y) so the truncated-domain far-field
    pin u0(x, Y) = U(0, x) holds exactly; this rescales the sandwich
    constants by 1/g(Y) but leaves the wall balance (a ratio) and the
    power-law decay untouched.  Without it the truncation tail puts an
    O((1+Y)^(1-theta)) kink under the top pin at t = 0.
    """
    trace = euler.value(0.0, grid.x)
    if np.min(trace) <= 0.0:
        raise ValueError(
            "outer trace U(0, x) must be strictly positive; "
            f"min U = {np.min(trace):.3e} makes the initial vorticity degenerate"
        )
    g, gp, gpp = profile(spec, grid.y)
    if np.min(gp) <= 0.0:
        raise ValueError("profile slope lost positivity; spec infeasible")
    top = float(g[-1])
    g, gp, gpp = g / top, gp / top, gpp / top
    u0 = Field(grid, np.outer(trace, g))
    omega0 = Field(grid, np.outer(trace, gp))
    omega0_y = Field(grid, np.outer(trace, gpp))
    a = slope_coefficient(spec) / top
    return InitialData(
        spec=spec,
        u0=u0,
        omega0=omega0,
        omega0_y=omega0_y,
        slope=a,
        c1=a * float(np.min(trace)),
        c2=a * float(np.max(trace)),
    )


def weighted_data_norm(data: InitialData, euler: EulerData, params: WeightParams,
                       k: int) -> float:
    """Spatial weighted Sobolev norm of the initial vorticity.

    Time derivatives of data are only defined through the evolution
    equations, so the data norm runs over x/y derivative counts with
    n_x + n_y <= k; each term carries the (1+y)^(ell+n_y) weight.
    All derivatives of the separable profile are exact closed forms.
    """
    grid = data.u0.grid
    spec = data.spec
    a = slope_coefficient(spec)
    th = spec.theta
    total = 0.0
    for n_x in range(k + 1):
        dtrace = euler.derivative(0, n_x, 0.0, grid.x)
        for n_y in range(k + 1 - n_x):
            # d^{n_y}/dy^{n_y} of a (1+y)^(-theta):
            coef = a * math.prod(-(th + m) for m in range(n_y)) if n_y > 0 else a
            ddy = coef * (1.0 + grid.y) ** (-(th + n_y))
            term = np.outer(dtrace, ddy) * weight(grid.y, params.ell + n_y)[None, :]
            total += quadrature_2d(term**2, grid)
    return math.sqrt(total)


def trace_sobolev_norm(values: np.ndarray, grid: Grid, k: int) -> float:
    """Discrete H^k norm over one period of a wall trace (centered stencils)."""
    total = grid.hx * float(np.sum(values**2))
    cur = values
    for _ in range(k):
        cur = (np.roll(cur, -1) - np.roll(cur, 1)) / (2.0 * grid.hx)
        total += grid.hx * float(np.sum(cur**2))
    return math.sqrt(total)


def fit_decay(omega: np.ndarray, y: np.ndarray, lo: float, hi: float) -> tuple[float, float, float]:
    """Least-squares tail exponent of omega ~ (1+y)^(-theta) on [lo, hi].

    Returns (theta_hat, c1_hat, c2_hat); slopes are fitted per x-column in
    log-log coordinates and aggregated by the median.
    """
    mask = (y >= lo) & (y <= hi)
    if mask.sum() < 3:
        raise ValueError("decay window holds fewer than 3 nodes")
    win = omega[:, mask]
    if np.min(win) <= 0.0:
        raise ValueError("vorticity must be positive on the decay window")
    logy = np.log1p(y[mask])
    logw = np.log(win)
    yc = logy - logy.mean()
    slopes = (logw @ yc) / float(yc @ yc)
    theta_hat = -float(np.median(slopes))
    scaled = win * (1.0 + y[mask])[None, :] ** theta_hat
    return theta_hat, float(np.min(scaled)), float(np.max(scaled))


def validate_compatibility(data: InitialData, euler: EulerData, grid: Grid,
                           params: WeightParams, k: int | None = None) -> dict:
    """Report every data condition; violations are reported, never raised."""
    spec = data.spec
    k = params.k_max if k is None else k
    u0 = data.u0.values
    om0 = data.omega0.values

    if spec.dirichlet:
        wall_residual = float(np.max(np.abs(u0[:, 0])))
    else:
        wall_residual = float(np.max(np.abs(om0[:, 0] - spec.beta * u0[:, 0])))

    far_field = float(np.max(np.abs(u0[:, -1] - euler.value(0.0, grid.x))))
    lo, hi = grid.y_max / 4.0, 3.0 * grid.y_max / 4.0
    try:
        theta_hat, c1_hat, c2_hat = fit_decay(om0, grid.y, lo, hi)
    except ValueError:
        theta_hat = c1_hat = c2_hat = math.nan

    vort_norm = weighted_data_norm(data, euler, params, k)
    report = {
        "min_omega0": float(np.min(om0)),
        "monotone": bool(np.min(om0) > 0.0),
        "wall_residual": wall_residual,
        "far_field_mismatch": far_field,
        "theta_hat": theta_hat,
        "c1_hat": c1_hat,
        "c2_hat": c2_hat,
        "vorticity_norm": vort_norm,
        "epsilon": spec.epsilon,
        "small": bool(vort_norm <= spec.epsilon * (1.0 + 1e-9)),
    }
    if not spec.dirichlet:
        wall_trace = trace_sobolev_norm(om0[:, 0], grid, k)
        report["wall_vorticity_norm"] = wall_trace
        report["scaled_wall_norm"] = wall_trace / math.sqrt(spec.beta)
        report["small"] = bool(
            vort_norm + report["scaled_wall_norm"] <= spec.epsilon * (1.0 + 1e-9)
        )
    return report
