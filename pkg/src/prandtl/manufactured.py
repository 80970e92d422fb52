"""Manufactured solutions: closed-form fields with injected forcing.

A manufactured solution u*(t,x,y) = U(t,x) * psi(t) * g(y) rides on an
outer-trace profile so all derivatives are exact.  The forcing

    f = u*_t + u* u*_x + v* u*_y + p_x - u*_yy,
    v* = -int_0^y u*_x,

makes u* an exact solution of the forced nonlinear system, and (with the
coefficient field frozen at u*) of each linearized step problem, which is
what the convergence-order studies measure against.
"""

import math
from dataclasses import dataclass

import numpy as np

from prandtl.euler import EulerData, pressure_gradient
from prandtl.grid import Grid


@dataclass(frozen=True)
class PowerProfile:
    """g(y) = 1 - c (1+y)^(-q): algebraic approach to the far field.

    Robin-compatible when c = beta/(q+beta); no-slip compatible when c=1.
    """

    q: float = 2.0
    c: float = 1.0

    @classmethod
    def robin(cls, beta: float, q: float = 2.0) -> "PowerProfile":
        return cls(q=q, c=beta / (q + beta))

    def g(self, y):
        return 1.0 - self.c * (1.0 + y) ** (-self.q)

    def dg(self, y, order: int):
        if order == 0:
            return self.g(y)
        coef = -self.c * math.prod(-(self.q + m) for m in range(order))
        return coef * (1.0 + y) ** (-(self.q + order))

    def integral(self, y):
        """int_0^y g."""
        q = self.q
        return y - self.c * ((1.0 + y) ** (1.0 - q) - 1.0) / (1.0 - q)


@dataclass(frozen=True)
class QuadraticProfile:
    """g(y) = y (2Y - y) / Y^2: no-slip wall, exact under 3-point stencils."""

    y_top: float

    def g(self, y):
        return y * (2.0 * self.y_top - y) / self.y_top**2

    def dg(self, y, order: int):
        if order == 0:
            return self.g(y)
        if order == 1:
            return (2.0 * self.y_top - 2.0 * y) / self.y_top**2
        if order == 2:
            return np.full_like(np.asarray(y, dtype=float), -2.0 / self.y_top**2)
        return np.zeros_like(np.asarray(y, dtype=float))

    def integral(self, y):
        return (self.y_top * y**2 - y**3 / 3.0) / self.y_top**2


class ManufacturedSolution:
    """u*(t,x,y) = U(t,x) * psi(t) * g(y), psi(t) = 1 + 0.5 exp(-rate t)."""

    def __init__(self, euler: EulerData, profile, rate: float = 1.0):
        self.euler = euler
        self.profile = profile
        self.rate = rate

    def _psi(self, t: float, order: int = 0) -> float:
        if order == 0:
            return 1.0 + 0.5 * math.exp(-self.rate * t)
        return 0.5 * (-self.rate) ** order * math.exp(-self.rate * t)

    def derivative(self, n_t: int, n_x: int, n_y: int, t: float, x, y) -> np.ndarray:
        """Exact mixed derivative of u*, shape (nx, ny)."""
        gpart = self.profile.dg(np.asarray(y, dtype=float), n_y) if n_y else self.profile.g(y)
        gpart = np.broadcast_to(np.asarray(gpart, dtype=float), (len(np.atleast_1d(y)),))
        total = np.zeros((len(np.atleast_1d(x)), len(np.atleast_1d(y))))
        # Leibniz in t over the U(t,x) * psi(t) product.
        for j in range(n_t + 1):
            u_fac = self.euler.derivative(j, n_x, t, np.atleast_1d(x))
            total += math.comb(n_t, j) * self._psi(t, n_t - j) * np.outer(u_fac, gpart)
        return total

    def value(self, t: float, x, y) -> np.ndarray:
        return self.derivative(0, 0, 0, t, x, y)

    def boundary_values(self, t: float, x, y_scalar: float) -> np.ndarray:
        return self.value(t, np.atleast_1d(x), np.array([y_scalar]))[:, 0]

    def v_value(self, t: float, x, y) -> np.ndarray:
        """Exact v* = -int_0^y u*_x."""
        ux_fac = self.euler.derivative(0, 1, t, np.atleast_1d(x)) * self._psi(t)
        return -np.outer(ux_fac, self.profile.integral(np.asarray(y, dtype=float)))

    def forcing(self, t: float, x, y) -> np.ndarray:
        """Source making u* solve the forced system (frozen at itself)."""
        u = self.value(t, x, y)
        u_t = self.derivative(1, 0, 0, t, x, y)
        u_x = self.derivative(0, 1, 0, t, x, y)
        u_y = self.derivative(0, 0, 1, t, x, y)
        u_yy = self.derivative(0, 0, 2, t, x, y)
        v = self.v_value(t, x, y)
        grid_x = np.atleast_1d(x)
        u_tr = self.euler.derivative(1, 0, t, grid_x)
        u0 = self.euler.derivative(0, 0, t, grid_x)
        u1 = self.euler.derivative(0, 1, t, grid_x)
        px = -(u_tr + u0 * u1)
        return u_t + u * u_x + v * u_y + px[:, None] - u_yy


def fit_order(spacings, errors) -> float:
    """Least-squares slope of log(error) against log(spacing)."""
    h = np.log(np.asarray(spacings, dtype=float))
    e = np.log(np.asarray(errors, dtype=float))
    hc = h - h.mean()
    return float((e @ hc) / (hc @ hc))
