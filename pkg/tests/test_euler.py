import math

import numpy as np
import pytest

from prandtl.euler import (
    EulerData,
    euler_sobolev_norm,
    euler_spacetime_norm,
    pressure_gradient,
    smallness_check,
)
from prandtl.grid import build_grid


@pytest.fixture
def grid():
    return build_grid(64, 9, 2.0 * math.pi, 4.0)


def test_pressure_gradient_constant_profile(grid):
    eu = EulerData(amplitude=0.3, decay_rate=0.0, profile="uniform")
    np.testing.assert_allclose(pressure_gradient(eu, 0.7, grid), 0.0, atol=1e-15)


def test_pressure_gradient_decaying_uniform(grid):
    eps, gamma = 0.2, 0.8
    eu = EulerData(amplitude=eps, decay_rate=gamma, profile="uniform")
    t = 0.3
    expected = gamma * eps * math.exp(-gamma * t)
    np.testing.assert_allclose(pressure_gradient(eu, t, grid), expected, rtol=1e-14)


@pytest.mark.parametrize("profile, kwargs", [
    ("sinusoidal", dict(wavenumber=1, shape_fraction=0.5)),
    ("gaussian", dict(shape_fraction=0.5, width=0.7)),
])
def test_bernoulli_consistency_fd_oracle(grid, profile, kwargs):
    # Oracle: central differences of closed-form U in t and x.
    eu = EulerData(amplitude=0.1, decay_rate=1.0, profile=profile, **kwargs)
    t, h = 0.4, 1e-5
    u_t = (eu.value(t + h, grid.x) - eu.value(t - h, grid.x)) / (2 * h)
    u_x = (eu.value(t, grid.x + h) - eu.value(t, grid.x - h)) / (2 * h)
    u = eu.value(t, grid.x)
    np.testing.assert_allclose(
        pressure_gradient(eu, t, grid), -(u_t + u * u_x), atol=1e-8
    )


def test_derivatives_match_fd(grid):
    eu = EulerData(amplitude=0.1, decay_rate=0.5, profile="sinusoidal",
                   wavenumber=2, shape_fraction=0.4)
    h = 1e-5
    fd_xx = (eu.value(0.2, grid.x + h) - 2 * eu.value(0.2, grid.x)
             + eu.value(0.2, grid.x - h)) / h**2
    np.testing.assert_allclose(eu.derivative(0, 2, 0.2, grid.x), fd_xx, atol=1e-5)
    fd_tx = (eu.derivative(0, 1, 0.2 + h, grid.x) - eu.derivative(0, 1, 0.2 - h, grid.x)) / (2 * h)
    np.testing.assert_allclose(eu.derivative(1, 1, 0.2, grid.x), fd_tx, atol=1e-8)


def test_sobolev_norm_zero(grid):
    eu = EulerData(amplitude=1e-30, profile="uniform")
    assert euler_sobolev_norm(eu, 0.0, 2, grid) == pytest.approx(0.0, abs=1e-25)


def test_sobolev_norm_sine_closed_forms():
    # Pure sine of unit amplitude around zero mean is not expressible with
    # the positive profiles, so check the closed forms on the shape part:
    # U = eps * (1 + 0.5 sin x): ||U||_{L^2}^2 = eps^2 (2 pi + 0.25 pi).
    grid = build_grid(128, 9, 2.0 * math.pi, 1.0)
    eps = 0.3
    eu = EulerData(amplitude=eps, decay_rate=0.0, profile="sinusoidal",
                   wavenumber=1, shape_fraction=0.5)
    got = euler_sobolev_norm(eu, 0.0, 0, grid)
    exact = eps * math.sqrt(2.0 * math.pi + 0.25 * math.pi)
    assert got == pytest.approx(exact, rel=1e-10)
    # s = 1 adds the derivative energy: ||U_x||^2 = eps^2 * 0.25 * pi.
    got1 = euler_sobolev_norm(eu, 0.0, 1, grid)
    exact1 = eps * math.sqrt(2.0 * math.pi + 0.5 * math.pi)
    assert got1 == pytest.approx(exact1, rel=1e-10)


def test_sobolev_norm_monotone_in_s(grid):
    eu = EulerData(amplitude=0.2, decay_rate=0.3, profile="sinusoidal",
                   wavenumber=3, shape_fraction=0.6)
    norms = [euler_sobolev_norm(eu, 0.1, s, grid) for s in range(4)]
    assert all(b >= a for a, b in zip(norms, norms[1:]))


def test_spacetime_norm_reduces_to_time_integral(grid):
    eu = EulerData(amplitude=0.5, decay_rate=1.0, profile="uniform")
    times = np.linspace(0.0, 1.0, 201)
    got = euler_spacetime_norm(eu, times, 0, grid)
    # ||U||^2 = L_x * eps^2 * int_0^1 exp(-2t) dt.
    exact = math.sqrt(grid.x_period * 0.25 * (1.0 - math.exp(-2.0)) / 2.0)
    assert got == pytest.approx(exact, rel=1e-4)


def test_positivity_guard():
    with pytest.raises(ValueError):
        EulerData(amplitude=0.1, profile="sinusoidal", shape_fraction=1.2)
    EulerData(amplitude=0.1, profile="sinusoidal", shape_fraction=1.2,
              positivity_required=False)


def test_smallness_check_modes(grid):
    eu = EulerData(amplitude=0.01, decay_rate=0.5, profile="uniform")
    rep = smallness_check(eu, 0.0, 2, epsilon=0.2, grid=grid)
    assert rep["small"]
    rep = smallness_check(eu, 0.0, 2, epsilon=1e-4, grid=grid)
    assert not rep["small"]
