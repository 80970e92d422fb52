"""Manufactured-solution convergence studies for the time stepper.

Three studies isolate the scheme's error terms:

  * time order:  x-independent quadratic vertical profile (spatially exact
    under the stencils), halving dt -- measures the first-order march;
  * vertical order: x-independent algebraic tail with dt scaled like hy^2
    -- measures the second-order diffusion/wall rows, on both wall types;
  * full physics: x-coupled problem with everything on; the monotone
    upwind advection caps the spatial order at one, the centered
    verification mode restores two.
"""

import math
from dataclasses import dataclass

import numpy as np

from prandtl.calculus import Field
from prandtl.euler import EulerData
from prandtl.grid import build_grid
from prandtl.manufactured import (
    ManufacturedSolution,
    PowerProfile,
    QuadraticProfile,
    fit_order,
)
from prandtl.stepper import StepConfig, advance


@dataclass
class StudyReport:
    name: str
    spacings: list
    errors: list
    order: float


def _march(mms: ManufacturedSolution, grid, euler, beta, dt, nsteps,
           advection="upwind") -> float:
    cfg = StepConfig(dt=dt, beta=beta, forcing=mms.forcing,
                     boundary_values=mms.boundary_values, advection=advection)
    u = Field(grid, mms.value(0.0, grid.x, grid.y))
    t = 0.0
    for _ in range(nsteps):
        coeff = Field(grid, mms.value(t, grid.x, grid.y))
        u = advance(u, coeff, euler, cfg, t)
        t += dt
    exact = mms.value(t, grid.x, grid.y)
    return float(np.sqrt(np.mean((u.values - exact) ** 2)))


def time_order_study(refinements: int = 3) -> StudyReport:
    """Halve dt on a spatially exact manufactured problem."""
    eu = EulerData(amplitude=0.5, decay_rate=0.7, profile="uniform")
    grid = build_grid(8, 33, 2.0 * math.pi, 4.0)
    mms = ManufacturedSolution(eu, QuadraticProfile(y_top=grid.y_max), rate=1.3)
    T = 0.5
    dts, errs = [], []
    n = 8
    for _ in range(refinements + 1):
        errs.append(_march(mms, grid, eu, math.inf, T / n, n))
        dts.append(T / n)
        n *= 2
    return StudyReport("time_order", dts, errs, fit_order(dts, errs))


def vertical_order_study(beta: float = math.inf, refinements: int = 3) -> StudyReport:
    """Halve hy with dt ~ hy^2 on an algebraic-tail manufactured problem."""
    eu = EulerData(amplitude=0.5, decay_rate=0.7, profile="uniform")
    prof = PowerProfile(q=2.0, c=1.0) if math.isinf(beta) else PowerProfile.robin(beta, q=2.0)
    T = 0.25
    ny, nsteps = 17, 4
    hys, errs = [], []
    for _ in range(refinements + 1):
        grid = build_grid(8, ny, 2.0 * math.pi, 8.0)
        mms = ManufacturedSolution(eu, prof, rate=1.3)
        errs.append(_march(mms, grid, eu, beta, T / nsteps, nsteps))
        hys.append(grid.hy)
        ny = (ny - 1) * 2 + 1
        nsteps *= 4
    name = "vertical_order_noslip" if math.isinf(beta) else "vertical_order_robin"
    return StudyReport(name, hys, errs, fit_order(hys, errs))


def full_physics_study(advection: str, refinements: int = 2) -> StudyReport:
    """Refine everything together on the x-coupled manufactured problem."""
    eu = EulerData(amplitude=0.5, decay_rate=0.7, profile="sinusoidal",
                   wavenumber=1, shape_fraction=0.5)
    T = 0.25
    nx, ny, nsteps = 8, 17, 4
    hys, errs = [], []
    for _ in range(refinements + 1):
        grid = build_grid(nx, ny, 2.0 * math.pi, 8.0)
        mms = ManufacturedSolution(eu, PowerProfile(q=2.0, c=1.0), rate=1.3)
        errs.append(_march(mms, grid, eu, math.inf, T / nsteps, nsteps, advection))
        hys.append(grid.hy)
        nx *= 2
        ny = (ny - 1) * 2 + 1
        nsteps *= 4
    return StudyReport(f"full_physics_{advection}", hys, errs, fit_order(hys, errs))


def run_mms_suite(refinements: int = 3) -> list[StudyReport]:
    return [
        time_order_study(refinements),
        vertical_order_study(math.inf, refinements),
        vertical_order_study(5.0, refinements),
        full_physics_study("centered", min(refinements, 2)),
        full_physics_study("upwind", min(refinements, 2)),
    ]


def mms_verdicts(reports: list[StudyReport]) -> dict:
    """Pass/fail per gated study; the upwind spatial order is reported only."""
    by_name = {r.name: r for r in reports}
    verdicts = {
        "time_order": bool(abs(by_name["time_order"].order - 1.0) <= 0.3),
        "vertical_order_noslip": bool(
            abs(by_name["vertical_order_noslip"].order - 2.0) <= 0.3
        ),
        "vertical_order_robin": bool(
            abs(by_name["vertical_order_robin"].order - 2.0) <= 0.3
        ),
    }
    if "full_physics_centered" in by_name:
        verdicts["full_physics_centered"] = bool(
            abs(by_name["full_physics_centered"].order - 2.0) <= 0.4
        )
    return verdicts
