import math

import numpy as np
import pytest
from scipy.linalg import solve_banded

from prandtl.calculus import Field, dy
from prandtl.euler import EulerData
from prandtl.grid import build_grid, quadrature_2d, weight
from prandtl.manufactured import (
    ManufacturedSolution,
    PowerProfile,
    QuadraticProfile,
    fit_order,
)
from prandtl.stepper import (
    CFLError,
    StepConfig,
    advance,
    robin_wall_row,
    wall_condition_residual,
)

STILL_AIR = EulerData(amplitude=1e-30, decay_rate=0.0, profile="uniform")


def _zero_boundary(t, x, y_scalar):
    return np.zeros(len(np.atleast_1d(x)))


def march_manufactured(mms, grid, euler, beta, dt, nsteps, advection="upwind"):
    cfg = StepConfig(dt=dt, beta=beta, forcing=mms.forcing,
                     boundary_values=mms.boundary_values, advection=advection)
    u = Field(grid, mms.value(0.0, grid.x, grid.y))
    t = 0.0
    for _ in range(nsteps):
        coeff = Field(grid, mms.value(t, grid.x, grid.y))
        u = advance(u, coeff, euler, cfg, t)
        t += dt
    return u, t


def test_zero_fixed_point():
    g = build_grid(16, 33, 2.0 * math.pi, 4.0)
    cfg = StepConfig(dt=0.05, beta=math.inf, boundary_values=_zero_boundary)
    u = Field.full(g, 0.0)
    out = advance(u, Field.full(g, 0.0), STILL_AIR, cfg, 0.0)
    assert np.max(np.abs(out.values)) == 0.0


def test_heat_equation_against_fine_reference():
    # Self-oracle: the same continuous 1D diffusion problem on a 4096-cell
    # grid with a tiny step; coarse runs must converge to it at O(dt+hy^2).
    def run(ny, nsteps, T=0.25, Y=8.0):
        g = build_grid(8, ny, 2.0 * math.pi, Y)
        cfg = StepConfig(dt=T / nsteps, beta=math.inf, boundary_values=_zero_boundary)
        prof = np.sin(math.pi * g.y / Y) * np.exp(-g.y / 2.0)
        u = Field(g, np.broadcast_to(prof, g.shape).copy())
        zero = Field.full(g, 0.0)
        t = 0.0
        for _ in range(nsteps):
            u = advance(u, zero, STILL_AIR, cfg, t)
            t += cfg.dt
        return g, u

    gref, uref = run(4097, 1024)
    errors = []
    for ny, nsteps in ((33, 32), (65, 128)):
        g, u = run(ny, nsteps)
        stride = (gref.ny - 1) // (g.ny - 1)
        ref = uref.values[0, ::stride]
        errors.append(
            float(np.sqrt(np.mean((u.values[0] - ref) ** 2) / np.mean(ref**2)))
        )
    assert errors[0] < 5e-3
    assert errors[0] / errors[1] > 3.0  # dt/4, hy/2: both error terms drop ~4x


def test_mms_dt_order_first():
    eu = EulerData(amplitude=0.5, decay_rate=0.7, profile="uniform")
    g = build_grid(8, 33, 2.0 * math.pi, 4.0)
    mms = ManufacturedSolution(eu, QuadraticProfile(y_top=g.y_max), rate=1.3)
    T = 0.5
    errs, dts = [], []
    for n in (8, 16, 32, 64):
        u, _ = march_manufactured(mms, g, eu, math.inf, T / n, n)
        exact = mms.value(T, g.x, g.y)
        errs.append(float(np.sqrt(np.mean((u.values - exact) ** 2))))
        dts.append(T / n)
    order = fit_order(dts, errs)
    assert 0.7 <= order <= 1.3


@pytest.mark.parametrize("beta", [math.inf, 5.0])
def test_mms_hy_order_second(beta):
    eu = EulerData(amplitude=0.5, decay_rate=0.7, profile="uniform")
    prof = PowerProfile(q=2.0, c=1.0) if math.isinf(beta) else PowerProfile.robin(beta, q=2.0)
    T = 0.25
    errs, hys = [], []
    for ny, nsteps in ((17, 4), (33, 16), (65, 64), (129, 256)):
        g = build_grid(8, ny, 2.0 * math.pi, 8.0)
        mms = ManufacturedSolution(eu, prof, rate=1.3)
        u, _ = march_manufactured(mms, g, eu, beta, T / nsteps, nsteps)
        exact = mms.value(T, g.x, g.y)
        errs.append(float(np.sqrt(np.mean((u.values - exact) ** 2))))
        hys.append(g.hy)
    order = fit_order(hys, errs)
    assert 1.7 <= order <= 2.3


def test_mms_full_physics_spatial_orders():
    # x-coupled manufactured problem: upwind advection caps the spatial
    # order at one; the centered verification mode restores two.
    def study(advection):
        eu = EulerData(amplitude=0.5, decay_rate=0.7, profile="sinusoidal",
                       wavenumber=1, shape_fraction=0.5)
        T = 0.25
        errs, hs = [], []
        for nx, ny, nsteps in ((8, 17, 4), (16, 33, 16), (32, 65, 64)):
            g = build_grid(nx, ny, 2.0 * math.pi, 8.0)
            mms = ManufacturedSolution(eu, PowerProfile(q=2.0, c=1.0), rate=1.3)
            u, _ = march_manufactured(mms, g, eu, math.inf, T / nsteps, nsteps,
                                      advection=advection)
            exact = mms.value(T, g.x, g.y)
            errs.append(float(np.sqrt(np.mean((u.values - exact) ** 2))))
            hs.append(g.hy)
        return fit_order(hs, errs)

    assert 0.6 <= study("upwind") <= 1.4
    assert 1.6 <= study("centered") <= 2.4


def test_robin_wall_residual_second_order():
    eu = EulerData(amplitude=0.5, decay_rate=0.7, profile="uniform")
    beta = 5.0
    resids = []
    for ny, nsteps in ((33, 16), (65, 64)):
        g = build_grid(8, ny, 2.0 * math.pi, 8.0)
        mms = ManufacturedSolution(eu, PowerProfile.robin(beta, q=2.0), rate=1.3)
        u, _ = march_manufactured(mms, g, eu, beta, 0.25 / nsteps, nsteps)
        resids.append(wall_condition_residual(u, beta))
    assert resids[0] / resids[1] > 2.5


def test_dirichlet_wall_exact():
    g = build_grid(8, 33, 2.0 * math.pi, 8.0)
    eu = EulerData(amplitude=0.5, decay_rate=0.7, profile="uniform")
    mms = ManufacturedSolution(eu, PowerProfile(q=2.0, c=1.0), rate=1.3)
    u, _ = march_manufactured(mms, g, eu, math.inf, 0.05, 4)
    assert np.max(np.abs(u.values[:, 0])) == 0.0


def test_steady_robin_row_exact_on_linear():
    # Oracle: u_yy = 0, u(Y) = c with a Robin wall has the linear solution
    # c (1 + beta y) / (1 + beta Y); the ghost-eliminated row is exact on it.
    for beta in (2.0, 1e6):
        g = build_grid(8, 41, 1.0, 4.0)
        _, diag0, up0 = robin_wall_row(beta, g.hy, math.inf)
        n = g.ny
        ab = np.zeros((3, n))
        ab[1, :] = 2.0 / g.hy**2
        ab[0, 1:] = -1.0 / g.hy**2
        ab[2, :-1] = -1.0 / g.hy**2
        ab[1, 0], ab[0, 1] = diag0, up0
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        b = np.zeros(n)
        b[-1] = 1.0
        sol = solve_banded((1, 1), ab, b)
        exact = (1.0 + beta * g.y) / (1.0 + beta * g.y_max)
        assert np.max(np.abs(sol - exact)) < 1e-12
        ghost = sol[1] - 2.0 * g.hy * beta * sol[0]
        assert abs((sol[1] - ghost) / (2.0 * g.hy) - beta * sol[0]) < 1e-12
        if beta >= 1e6:
            assert abs(sol[0]) <= 2.0 / (beta * g.hy)


def test_robin_row_rejects_bad_beta():
    with pytest.raises(ValueError):
        robin_wall_row(0.0, 0.1, 0.01)
    with pytest.raises(ValueError):
        robin_wall_row(-1.0, 0.1, 0.01)
    with pytest.raises(ValueError):
        robin_wall_row(math.inf, 0.1, 0.01)


def test_cfl_violation_reports_required_dt():
    g = build_grid(8, 17, 1.0, 2.0)
    eu = EulerData(amplitude=1.0, decay_rate=0.0, profile="uniform")
    cfg = StepConfig(dt=0.5, beta=math.inf)
    fast = Field.full(g, 1.0)
    with pytest.raises(CFLError, match="exceeds"):
        advance(fast, fast, eu, cfg, 0.0)


def test_maximum_principle_pure_diffusion():
    g = build_grid(16, 65, 2.0 * math.pi, 10.0)
    cfg = StepConfig(dt=0.1, beta=math.inf, boundary_values=_zero_boundary)
    rng = np.random.default_rng(11)
    u = Field(g, rng.uniform(0.0, 1.0, size=g.shape))
    u.values[:, 0] = 0.0
    u.values[:, -1] = 0.0
    zero = Field.full(g, 0.0)
    t = 0.0
    for _ in range(10):
        lo, hi = u.values.min(), u.values.max()
        u = advance(u, zero, STILL_AIR, cfg, t)
        t += cfg.dt
        assert u.values.min() >= min(lo, 0.0) - 1e-13
        assert u.values.max() <= max(hi, 0.0) + 1e-13


def test_implicit_diffusion_dissipates_weighted_energy():
    g = build_grid(16, 81, 2.0 * math.pi, 20.0)
    cfg = StepConfig(dt=0.05, beta=math.inf, boundary_values=_zero_boundary)
    u = Field(g, np.outer(1.0 + 0.3 * np.sin(g.x), g.y * np.exp(-g.y)))
    zero = Field.full(g, 0.0)
    w2 = weight(g.y, 3.0)[None, :]
    t = 0.0
    prev = quadrature_2d(w2 * u.values**2, g)
    for _ in range(20):
        u = advance(u, zero, STILL_AIR, cfg, t)
        t += cfg.dt
        cur = quadrature_2d(w2 * u.values**2, g)
        assert cur <= prev * (1.0 + 1e-13)
        prev = cur


def test_advance_deterministic():
    g = build_grid(16, 33, 2.0 * math.pi, 4.0)
    eu = EulerData(amplitude=0.1, decay_rate=0.5, profile="sinusoidal",
                   wavenumber=1, shape_fraction=0.4)
    cfg = StepConfig(dt=0.02, beta=25.0)
    u = Field(g, np.outer(eu.value(0.0, g.x), 1.0 - (1.0 + g.y) ** -2))
    coeff = u.copy()
    a = advance(u, coeff, eu, cfg, 0.0)
    b = advance(u.copy(), coeff.copy(), eu, cfg, 0.0)
    assert np.array_equal(a.values, b.values)
