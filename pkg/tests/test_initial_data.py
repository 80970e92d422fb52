import math

import numpy as np
import pytest

from prandtl.calculus import Field, dy
from prandtl.euler import EulerData
from prandtl.grid import WeightParams, build_grid
from prandtl.initial_data import (
    InitialDataSpec,
    fit_decay,
    make_initial_data,
    profile,
    slope_coefficient,
    validate_compatibility,
)


@pytest.fixture
def grid():
    return build_grid(32, 161, 2.0 * math.pi, 40.0)


@pytest.fixture
def euler():
    return EulerData(amplitude=0.01, decay_rate=0.5, profile="uniform")


def test_dirichlet_profile_closed_form(grid):
    spec = InitialDataSpec(theta=3.0, epsilon=0.01, beta=math.inf)
    g, gp, _ = profile(spec, grid.y)
    np.testing.assert_allclose(g, 1.0 - (1.0 + grid.y) ** (-2.0), rtol=1e-14)
    assert g[0] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(gp, 2.0 * (1.0 + grid.y) ** (-3.0), rtol=1e-14)
    assert np.all(gp > 0)


def test_robin_profile_wall_balance(grid):
    spec = InitialDataSpec(theta=3.0, epsilon=0.01, beta=2.0)
    a = slope_coefficient(spec)
    assert a == pytest.approx(1.0)
    g, gp, _ = profile(spec, grid.y)
    assert g[0] == pytest.approx(0.5)
    assert gp[0] == pytest.approx(1.0)
    assert gp[0] == pytest.approx(spec.beta * g[0])


def test_degenerate_trace_rejected(grid):
    flat = EulerData(amplitude=1e-12, decay_rate=0.0, profile="uniform",
                     positivity_required=False)
    # amplitude > 0 passes, but a nonpositive trace must be rejected: force one.
    class ZeroTrace(EulerData):
        def value(self, t, x):
            return np.zeros_like(np.asarray(x, dtype=float))
    zt = ZeroTrace(amplitude=0.01)
    with pytest.raises(ValueError, match="positive"):
        make_initial_data(InitialDataSpec(), zt, grid)
    make_initial_data(InitialDataSpec(), flat, grid)


def test_generated_data_conditions(grid, euler):
    spec = InitialDataSpec(theta=3.0, epsilon=0.01, beta=50.0)
    data = make_initial_data(spec, euler, grid)
    assert np.min(data.omega0.values) > 0
    # Analytic wall balance is exact.
    resid = np.abs(data.omega0.values[:, 0] - spec.beta * data.u0.values[:, 0])
    assert np.max(resid) < 1e-14
    # Sandwich constants bound the vorticity with the exact power law.
    decay = (1.0 + grid.y) ** (-spec.theta)
    assert np.all(data.omega0.values <= data.c2 * decay[None, :] * (1 + 1e-12))
    assert np.all(data.omega0.values >= data.c1 * decay[None, :] * (1 - 1e-12))


def test_sandwich_ratio_tracks_trace_ratio(grid):
    eu = EulerData(amplitude=0.01, decay_rate=0.5, profile="sinusoidal",
                   wavenumber=1, shape_fraction=0.3)
    data = make_initial_data(InitialDataSpec(beta=50.0), eu, grid)
    trace = eu.value(0.0, grid.x)
    assert data.c2 / data.c1 <= trace.max() / trace.min() * (1.0 + 1e-6)


def test_validation_report_clean_robin(grid, euler):
    spec = InitialDataSpec(theta=3.0, epsilon=0.01, beta=2.0)
    data = make_initial_data(spec, euler, grid)
    rep = validate_compatibility(data, euler, grid, WeightParams(ell=1.5, theta=3.0))
    assert rep["monotone"]
    assert rep["wall_residual"] < 1e-12
    assert rep["theta_hat"] == pytest.approx(3.0, abs=1e-8)
    assert rep["far_field_mismatch"] < spec.epsilon * 0.01


def test_validation_detects_wall_violation(grid, euler):
    spec = InitialDataSpec(theta=3.0, epsilon=0.01, beta=math.inf)
    data = make_initial_data(spec, euler, grid)
    data.u0.values[:, 0] += 1e-3
    rep = validate_compatibility(data, euler, grid, WeightParams(ell=1.5, theta=3.0))
    assert rep["wall_residual"] == pytest.approx(1e-3, rel=1e-9)


def test_validation_flags_sign_change(grid, euler):
    spec = InitialDataSpec(theta=3.0, epsilon=0.01, beta=50.0)
    data = make_initial_data(spec, euler, grid)
    data.omega0.values[5, 40] = -1e-6
    rep = validate_compatibility(data, euler, grid, WeightParams(ell=1.5, theta=3.0))
    assert not rep["monotone"]


def test_discrete_vorticity_matches_analytic(grid, euler):
    data = make_initial_data(InitialDataSpec(beta=50.0), euler, grid)
    om_fd = dy(data.u0, 1).values
    err = np.abs(om_fd - data.omega0.values)
    # Stencil truncation scales with hy^2 and the third y-derivative.
    spec = data.spec
    third_deriv_max = 0.01 * data.slope * spec.theta * (spec.theta + 1.0)
    assert np.max(err) < grid.hy**2 * third_deriv_max  # one-sided wall row
    assert np.max(err[:, 1:-1]) < grid.hy**2 / 6.0 * third_deriv_max * 1.1


def test_robin_to_dirichlet_limit(grid, euler):
    spec_inf = InitialDataSpec(theta=3.0, epsilon=0.01, beta=math.inf)
    u_inf = make_initial_data(spec_inf, euler, grid).u0.values
    slopes, gaps = [], []
    for beta in (10.0, 40.0, 160.0, 640.0):
        spec = InitialDataSpec(theta=3.0, epsilon=0.01, beta=beta)
        slopes.append(slope_coefficient(spec))
        u_b = make_initial_data(spec, euler, grid).u0.values
        gaps.append(np.max(np.abs(u_b - u_inf)))
    assert all(b > a for a, b in zip(slopes, slopes[1:]))  # monotone in beta
    assert slopes[-1] < spec_inf.theta - 1.0
    # O(1/beta) approach: quadrupling beta cuts the gap by about 4.
    ratios = [a / b for a, b in zip(gaps, gaps[1:])]
    assert all(3.0 < r < 5.0 for r in ratios)


def test_fit_decay_exact_power_law(grid):
    omega = np.broadcast_to((1.0 + grid.y) ** (-3.0), grid.shape)
    th, c1, c2 = fit_decay(omega, grid.y, 10.0, 30.0)
    assert th == pytest.approx(3.0, abs=1e-10)
    assert c1 == pytest.approx(1.0, rel=1e-9)
    assert c2 == pytest.approx(1.0, rel=1e-9)


def test_fit_decay_modulated(grid):
    mod = 2.0 * (1.0 + 0.1 * np.sin(grid.x))
    omega = np.outer(mod, (1.0 + grid.y) ** (-3.0))
    th, c1, c2 = fit_decay(omega, grid.y, 10.0, 30.0)
    assert th == pytest.approx(3.0, abs=0.01)
    assert c2 / c1 == pytest.approx(1.1 / 0.9, rel=1e-6)


def test_fit_decay_rejects_nonpositive(grid):
    omega = np.ones(grid.shape)
    omega[3, 80] = -1.0
    with pytest.raises(ValueError, match="positive"):
        fit_decay(omega, grid.y, 10.0, 30.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        InitialDataSpec(theta=0.5)
    with pytest.raises(ValueError):
        InitialDataSpec(epsilon=-1.0)
    with pytest.raises(ValueError):
        InitialDataSpec(beta=0.0)
