"""Outer-flow trace U(t, x), its exact derivatives, and pressure forcing.

Only closed-form profile families are supported so every tangential
derivative up to k_max+1 is exact: no differencing of U ever happens.
The pressure gradient comes from the Bernoulli relation
p_x = -(U_t + U U_x), which therefore holds pointwise to rounding.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from prandtl.grid import Grid

PROFILES = ("uniform", "sinusoidal", "gaussian")


@dataclass(frozen=True)
class EulerData:
    """Closed-form outer trace: U(t,x) = amplitude * decay(t) * shape(x).

    amplitude: overall scale (> 0 keeps the monotone regime meaningful);
    decay_rate: gamma in exp(-gamma t);
    profile: one of PROFILES;
    wavenumber: integer x-mode count for the sinusoidal/gaussian shapes;
    shape_fraction: relative size of the x-variation, |fraction| < 1 so
        U stays positive;
    width: gaussian bump width (gaussian profile only);
    x_period: period of the domain the shape lives on;
    k_max: highest derivative order guaranteed available.
    """

    amplitude: float = 0.01
    decay_rate: float = 0.5
    profile: str = "uniform"
    wavenumber: int = 1
    shape_fraction: float = 0.0
    width: float = 0.5
    x_period: float = 2.0 * math.pi
    k_max: int = 2
    positivity_required: bool = True
    _gauss_shifts: tuple = field(init=False, repr=False, default=())

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; pick from {PROFILES}")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.positivity_required and abs(self.shape_fraction) >= 1 and self.profile != "uniform":
            raise ValueError("|shape_fraction| must stay below 1 to keep U > 0")
        object.__setattr__(self, "_gauss_shifts", tuple(range(-3, 4)))

    # -- x-shape and its derivatives ------------------------------------

    def _shape_derivative(self, b: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.profile == "uniform":
            return np.ones_like(x) if b == 0 else np.zeros_like(x)
        if self.profile == "sinusoidal":
            k = 2.0 * math.pi * self.wavenumber / self.x_period
            base = np.ones_like(x) if b == 0 else np.zeros_like(x)
            return base + self.shape_fraction * k**b * np.sin(k * x + b * math.pi / 2.0)
        # Periodized gaussian bump: sum of image gaussians, derivatives via
        # the polynomial recurrence p' - (s/w^2) p applied b times.
        w2 = self.width**2
        coeffs = np.zeros(b + 1)
        coeffs[0] = 1.0
        for _ in range(b):
            dcoeffs = np.polynomial.polynomial.polyder(coeffs) if len(coeffs) > 1 else np.zeros(1)
            shifted = np.zeros(len(coeffs) + 1)
            shifted[: len(dcoeffs)] += dcoeffs
            shifted[1 : len(coeffs) + 1] -= coeffs / w2
            coeffs = shifted
        out = np.zeros_like(x)
        x0 = self.x_period / 2.0
        for n in self._gauss_shifts:
            s = x - x0 - n * self.x_period
            poly = np.polynomial.polynomial.polyval(s, coeffs)
            out += poly * np.exp(-(s**2) / (2.0 * w2))
        base = np.ones_like(x) if b == 0 else np.zeros_like(x)
        return base + self.shape_fraction * out

    def derivative(self, n_t: int, n_x: int, t: float, x: np.ndarray) -> np.ndarray:
        """Exact d^{n_t}/dt^{n_t} d^{n_x}/dx^{n_x} U(t, x)."""
        tfac = self.amplitude * (-self.decay_rate) ** n_t * math.exp(-self.decay_rate * t)
        return tfac * self._shape_derivative(n_x, x)

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.derivative(0, 0, t, x)

    def min_value(self, t: float, grid: Grid) -> float:
        return float(np.min(self.value(t, grid.x)))


def pressure_gradient(euler: EulerData, t: float, grid: Grid) -> np.ndarray:
    """Bernoulli pressure gradient p_x(t, x) = -(U_t + U U_x), shape (nx,)."""
    u_t = euler.derivative(1, 0, t, grid.x)
    u = euler.derivative(0, 0, t, grid.x)
    u_x = euler.derivative(0, 1, t, grid.x)
    return -(u_t + u * u_x)


def euler_sobolev_norm(euler: EulerData, t: float, s: int, grid: Grid) -> float:
    """Discrete H^s norm of U(t, .) over one period (rectangle rule)."""
    total = 0.0
    for b in range(s + 1):
        db = euler.derivative(0, b, t, grid.x)
        total += grid.hx * float(np.sum(db**2))
    return math.sqrt(total)


def euler_spacetime_norm(euler: EulerData, times: np.ndarray, s: int, grid: Grid) -> float:
    """Accumulated H^s([0,T] x R) norm: time-trapezoid over instantaneous squares."""
    times = np.asarray(times, dtype=float)
    sq = np.empty(len(times))
    for i, t in enumerate(times):
        total = 0.0
        for a in range(s + 1):
            for b in range(s + 1 - a):
                dab = euler.derivative(a, b, t, grid.x)
                total += grid.hx * float(np.sum(dab**2))
        sq[i] = total
    return math.sqrt(float(np.trapezoid(sq, times))) if len(times) > 1 else math.sqrt(sq[0])


def smallness_check(euler: EulerData, t: float, k: int, epsilon: float, grid: Grid,
                    c0: float = 1.0) -> dict:
    """Report whether ||U||_{H^{k+1}} <= c0 * epsilon at time t.

    A violation downgrades the run to local-existence mode (warning), it
    never aborts: large outer data only shortens the trustworthy horizon.
    """
    norm = euler_sobolev_norm(euler, t, k + 1, grid)
    ok = norm <= c0 * epsilon * (1.0 + 1e-12)
    return {"norm": norm, "bound": c0 * epsilon, "small": bool(ok)}
