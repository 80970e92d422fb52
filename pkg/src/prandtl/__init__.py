"""Boundary-layer solver and verification harness.

Solves the 2D unsteady boundary-layer (Prandtl) system on an x-periodic
half plane with a Robin (slip-proportional) or Dirichlet (no-slip) wall
condition, by outer fixed-point linearization over [0, T] and an inner
semi-implicit march.  The diagnostics side instantiates weighted-norm,
transformed-vorticity, and growth-envelope checks used by the acceptance
suite.
"""

from prandtl.grid import Grid, MultiIndex, WeightParams, build_grid, quadrature_2d, weight
from prandtl.calculus import Field, FlowHistory

__all__ = [
    "Grid",
    "WeightParams",
    "MultiIndex",
    "build_grid",
    "weight",
    "quadrature_2d",
    "Field",
    "FlowHistory",
]
