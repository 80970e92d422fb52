import math

import numpy as np
import pytest

from prandtl.calculus import Field
from prandtl.euler import EulerData
from prandtl.grid import WeightParams, build_grid
from prandtl.initial_data import InitialDataSpec, make_initial_data
from prandtl.picard import (
    MonotonicityError,
    PicardConfig,
    residual,
    resweep,
    solve,
)
from prandtl.stepper import StepConfig


def test_zero_configuration_converges_immediately():
    grid = build_grid(16, 33, 2.0 * math.pi, 8.0)
    params = WeightParams(ell=1.5, theta=3.0, k_max=2)
    euler = EulerData(amplitude=1e-300, decay_rate=0.0, profile="uniform")
    cfg = StepConfig(dt=0.05, beta=math.inf)
    pic = PicardConfig(final_time=0.5, max_iters=5, tol=1e-12, snapshot_stride=2)
    traj = solve(Field.full(grid, 0.0), euler, grid, cfg, pic, params)
    assert traj.converged
    assert traj.iterate_count == 1
    assert traj.convergence_history[0] == 0.0
    assert np.max(np.abs(traj.u)) == 0.0


def test_steady_linear_profile_is_fixed_point():
    # Oracle: with a time-constant outer trace the truncated problem has
    # the exact steady state U (1 + beta y) / (1 + beta Y), which the
    # tridiagonal rows reproduce exactly; one sweep must keep it still.
    grid = build_grid(16, 41, 2.0 * math.pi, 8.0)
    params = WeightParams(ell=1.5, theta=3.0, k_max=2)
    beta = 5.0
    euler = EulerData(amplitude=0.01, decay_rate=0.0, profile="uniform")
    u_inf = euler.value(0.0, grid.x)
    steady = np.outer(u_inf, (1.0 + beta * grid.y) / (1.0 + beta * grid.y_max))
    cfg = StepConfig(dt=0.05, beta=beta)
    pic = PicardConfig(final_time=0.5, max_iters=5, tol=1e-8, snapshot_stride=2)
    traj = solve(Field(grid, steady), euler, grid, cfg, pic, params)
    assert traj.converged
    assert traj.convergence_history[0] < pic.tol * 10.0
    assert np.max(np.abs(traj.u[-1] - steady)) < 1e-13


def test_default_run_contracts(default_traj):
    hist = default_traj.convergence_history
    assert default_traj.converged
    assert all(b < a for a, b in zip(hist, hist[1:]))
    assert all(b / a < 1.0 for a, b in zip(hist, hist[1:]))
    assert default_traj.min_omega > 0.0


def test_x_coupled_run_contracts_geometrically():
    # With an x-dependent outer trace the advection and v terms couple the
    # iterates, so convergence takes several genuinely contracting sweeps.
    grid = build_grid(24, 81, 2.0 * math.pi, 20.0)
    params = WeightParams(ell=1.5, theta=3.0, k_max=2)
    euler = EulerData(amplitude=0.05, decay_rate=0.3, profile="sinusoidal",
                      wavenumber=1, shape_fraction=0.4)
    data = make_initial_data(InitialDataSpec(theta=3.0, epsilon=0.05, beta=20.0),
                             euler, grid)
    cfg = StepConfig(dt=1.0 / 32, beta=20.0)
    pic = PicardConfig(final_time=0.5, max_iters=30, tol=1e-10, snapshot_stride=4)
    traj = solve(data.u0, euler, grid, cfg, pic, params)
    assert traj.converged
    hist = traj.convergence_history
    assert len(hist) >= 3
    ratios = [b / a for a, b in zip(hist, hist[1:])]
    assert all(r < 1.0 for r in ratios)


def test_resweep_is_fixed_point(default_cfg, default_data, default_traj):
    _, change = resweep(default_traj, default_data.u0, default_cfg.euler,
                        default_cfg.step)
    assert change < 2.0 * default_cfg.picard.tol


def test_monotonicity_loss_detected():
    grid = build_grid(16, 33, 2.0 * math.pi, 8.0)
    params = WeightParams(ell=1.5, theta=3.0, k_max=2)
    euler = EulerData(amplitude=0.01, decay_rate=0.0, profile="uniform")
    # Decreasing-in-y data: vorticity negative from the start.
    u0 = Field(grid, np.outer(euler.value(0.0, grid.x), 2.0 - grid.y / grid.y_max))
    cfg = StepConfig(dt=0.05, beta=math.inf,
                     boundary_values=lambda t, x, ys: np.zeros(grid.nx))
    pic = PicardConfig(final_time=0.25, max_iters=3, tol=1e-8, snapshot_stride=2)
    with pytest.raises(MonotonicityError, match="positivity"):
        solve(u0, euler, grid, cfg, pic, params)


def test_nonconvergence_is_flagged_not_raised(default_cfg, default_data):
    grid = default_cfg.grid
    euler = EulerData(amplitude=0.05, decay_rate=0.3, profile="sinusoidal",
                      wavenumber=1, shape_fraction=0.4)
    data = make_initial_data(InitialDataSpec(theta=3.0, epsilon=0.05, beta=20.0),
                             euler, grid)
    cfg = StepConfig(dt=1.0 / 32, beta=20.0)
    pic = PicardConfig(final_time=0.25, max_iters=1, tol=1e-14, snapshot_stride=4)
    traj = solve(data.u0, euler, grid, cfg, pic, params=default_cfg.weights)
    assert not traj.converged
    assert traj.iterate_count == 1


def test_residual_zero_solution():
    grid = build_grid(16, 33, 2.0 * math.pi, 8.0)
    params = WeightParams(ell=1.5, theta=3.0, k_max=2)
    euler = EulerData(amplitude=1e-300, decay_rate=0.0, profile="uniform")
    cfg = StepConfig(dt=0.05, beta=math.inf)
    pic = PicardConfig(final_time=0.5, max_iters=3, tol=1e-12, snapshot_stride=2)
    traj = solve(Field.full(grid, 0.0), euler, grid, cfg, pic, params)
    res = residual(traj, euler)
    assert all(r["residual"] < 1e-280 for r in res)


def test_residual_small_on_default_run(default_traj, default_cfg):
    res = residual(default_traj, default_cfg.euler)
    values = [r["residual"] for r in res]
    assert values, "expected residual records"
    # Discretization-level residual, far below the field scale.
    assert max(values) < 0.1
    assert values[-1] <= values[0]


def test_residual_refines_with_grid():
    # Self-consistency: the equation residual of the converged solution is
    # discretization-dominated, so refining dt and hy together shrinks it.
    results = []
    for ny, nsteps in ((81, 32), (161, 128)):
        grid = build_grid(16, ny, 2.0 * math.pi, 40.0)
        params = WeightParams(ell=1.5, theta=3.0, k_max=2)
        euler = EulerData(amplitude=0.01, decay_rate=0.5, profile="uniform")
        data = make_initial_data(InitialDataSpec(theta=3.0, epsilon=0.01, beta=50.0),
                                 euler, grid)
        cfg = StepConfig(dt=1.0 / nsteps, beta=50.0)
        pic = PicardConfig(final_time=1.0, max_iters=30, tol=1e-10,
                           snapshot_stride=nsteps // 4)
        traj = solve(data.u0, euler, grid, cfg, pic, params)
        res = residual(traj, euler)
        results.append(res[-1]["residual"])
    assert results[1] < 0.45 * results[0]
