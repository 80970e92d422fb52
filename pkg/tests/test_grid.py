import math

import numpy as np
import pytest

from prandtl.grid import (
    MultiIndex,
    WeightParams,
    build_grid,
    index_family,
    quadrature_2d,
    tail_report,
    trapezoid_weights,
    weight,
)


def test_build_grid_spacings():
    g = build_grid(8, 9, 2.0 * math.pi, 8.0)
    assert g.hx == pytest.approx(math.pi / 4.0)
    assert g.hy == pytest.approx(1.0)
    assert g.y[0] == 0.0
    assert g.y[8] == pytest.approx(8.0)

    g = build_grid(16, 17, 1.0, 4.0)
    assert g.hx == pytest.approx(1.0 / 16.0)
    assert g.hy == pytest.approx(0.25)


@pytest.mark.parametrize(
    "nx, ny, lx, ymax",
    [(7, 9, 1.0, 1.0), (8, 7, 1.0, 1.0), (8, 9, 0.0, 1.0), (8, 9, 1.0, -2.0),
     (8, 9, math.nan, 1.0), (8, 9, 1.0, math.inf)],
)
def test_build_grid_rejects_bad_dimensions(nx, ny, lx, ymax):
    with pytest.raises(ValueError):
        build_grid(nx, ny, lx, ymax)


def test_weight_values():
    assert weight(0.0, 3.0) == pytest.approx(1.0)
    assert weight(1.0, 2.0) == pytest.approx(4.0)
    assert weight(3.0, -1.0) == pytest.approx(0.25)


def test_weight_multiplicative_and_monotone():
    y = np.linspace(0.0, 20.0, 41)
    for a, b in [(0.5, 1.5), (2.0, -1.0), (1.3, 2.2)]:
        np.testing.assert_allclose(weight(y, a) * weight(y, b), weight(y, a + b), rtol=1e-14)
    w = weight(y, 2.5)
    assert np.all(np.diff(w) > 0)


def test_quadrature_constant_area():
    g = build_grid(10, 13, 2.0, 3.0)
    assert quadrature_2d(np.ones(g.shape), g) == pytest.approx(6.0)


def test_quadrature_exact_on_linear_in_y():
    g = build_grid(8, 9, 1.0, 2.0)
    f = np.broadcast_to(g.y, g.shape)
    assert quadrature_2d(f, g) == pytest.approx(2.0, abs=1e-14)


def test_quadrature_exponential_and_convergence_order():
    # Oracle: closed form of the integral of exp(-y) over [0, 20].
    exact = 1.0 - math.exp(-20.0)
    errs = []
    for ny in (41, 81):
        g = build_grid(8, ny, 1.0, 20.0)
        f = np.broadcast_to(np.exp(-g.y), g.shape)
        errs.append(abs(quadrature_2d(f, g) - exact))
    assert errs[0] < 3e-2
    ratio = errs[0] / errs[1]
    assert 3.0 < ratio < 5.0  # second-order trapezoid


def test_quadrature_linear_in_integrand():
    g = build_grid(8, 11, 1.5, 2.0)
    rng = np.random.default_rng(7)
    f1 = rng.normal(size=g.shape)
    f2 = rng.normal(size=g.shape)
    lhs = quadrature_2d(2.5 * f1 - 0.75 * f2, g)
    rhs = 2.5 * quadrature_2d(f1, g) - 0.75 * quadrature_2d(f2, g)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_quadrature_rejects_nan():
    g = build_grid(8, 9, 1.0, 1.0)
    f = np.ones(g.shape)
    f[3, 4] = math.nan
    with pytest.raises(ValueError, match="NaN"):
        quadrature_2d(f, g)


def test_trapezoid_weights_sum_to_height():
    g = build_grid(8, 33, 1.0, 5.0)
    assert trapezoid_weights(g).sum() == pytest.approx(5.0)


def test_weight_params_validation():
    WeightParams(ell=1.5, theta=3.0, k_max=2)
    with pytest.raises(ValueError):
        WeightParams(ell=0.9, theta=3.0)
    with pytest.raises(ValueError):
        WeightParams(ell=2.0, theta=1.4)
    with pytest.raises(ValueError):
        WeightParams(ell=1.5, theta=3.0, k_max=0)


def test_multi_index_family_orders():
    fam = index_family(2)
    assert MultiIndex(0, 0, 0) in fam
    assert MultiIndex(0, 1, 1) in fam
    assert all(ix.total <= 2 for ix in fam)
    assert len(fam) == 10
    with pytest.raises(ValueError):
        MultiIndex(-1, 0, 0)


def test_tail_report_scale():
    g = build_grid(8, 9, 1.0, 40.0)
    rep = tail_report(WeightParams(ell=1.5, theta=3.0), g)
    assert rep["tail_measure"] == pytest.approx(41.0 ** (-1.5))
    assert not rep["within_tol"]
