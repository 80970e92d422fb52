"""Norm equivalences, energy records, growth envelope, and trace scalings.

Everything here is a pure function of a solved trajectory: per-snapshot
weighted norms of the transformed vorticity family, the Robin boundary
integral, the growth-envelope fit, tail-decay fits, and the wall-trace
norms the parameter sweeps regress on.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from prandtl.calculus import Field, dx, dy, mixed_derivative
from prandtl.euler import EulerData, euler_sobolev_norm
from prandtl.grid import Grid, MultiIndex, index_family, quadrature_2d, weight
from prandtl.initial_data import fit_decay, trace_sobolev_norm
from prandtl.transforms import (
    ShearState,
    TransformedVorticity,
    reaction_coefficient,
    tilde_history,
    transformed_vorticity,
    wall_forcing_term,
    wall_norm,
    wall_reaction_coefficient,
    weighted_norm,
)

ENVELOPE_EXPONENT = 3  # smallest admissible power in the growth envelope

# A transform/derivative pair whose norms are both below this fraction of
# the family peak is an exact algebraic degeneracy, not an equivalence to
# bracket (e.g. idx=(0,0,1), or x-indices of x-independent flows).
DEGENERATE_FRAC = 1e-9


def equivalence_floor(kappa: float, ell: float) -> float:
    """Lower bracket constant from the measured curvature ratio."""
    return 1.0 / (1.0 + 2.0 / (2.0 * ell - 1.0) * kappa)


def norm_equivalence_ratios(history, euler: EulerData, idx: MultiIndex,
                            ell: float) -> dict:
    """Both transform/derivative norm ratios with the measured bracket.

    Returns ratio_wd = |W| / |d omega|, ratio_dw its reciprocal, the
    bracket floor from the measured curvature, and a degeneracy flag for
    identically vanishing pairs (reported separately, never bracketed).
    """
    w = transformed_vorticity(history, euler, idx)
    state = ShearState(history.latest)
    dom = mixed_derivative(history, MultiIndex(idx.n_t, idx.n_x, idx.n_y + 1))
    ell_eff = ell + idx.n_y
    n_w = weighted_norm(w.values, ell_eff, mask=w.mask)
    n_d = weighted_norm(dom, ell_eff, mask=w.mask)
    kappa = state.kappa()
    floor = equivalence_floor(kappa, ell)

    scale = max(
        weighted_norm(history.latest, ell), weighted_norm(state.u_y, ell), 1e-300
    )
    degenerate = (n_w <= DEGENERATE_FRAC * scale) or (n_d <= DEGENERATE_FRAC * scale)
    out = {
        "idx": idx.label(),
        "norm_transform": n_w,
        "norm_derivative": n_d,
        "kappa": kappa,
        "floor": floor,
        "degenerate": bool(degenerate),
    }
    if not degenerate:
        out["ratio_wd"] = n_w / n_d
        out["ratio_dw"] = n_d / n_w
    return out


def hardy_halfline_check(ell: float, grid: Grid) -> dict:
    """Discrete half-line weighted comparison on f = (1+y)^-2.

    || (1+y)^(ell-1) f || against (2/(2 ell - 1)) || (1+y)^ell f' ||, both
    per unit x-length; the first never exceeds the second for decaying f.
    """
    y = grid.y
    f = (1.0 + y) ** (-2.0)
    fp = -2.0 * (1.0 + y) ** (-3.0)
    wy = np.full(grid.ny, grid.hy)
    wy[0] *= 0.5
    wy[-1] *= 0.5
    lhs = math.sqrt(float(np.sum(wy * ((1.0 + y) ** (ell - 1.0) * f) ** 2)))
    rhs = 2.0 / (2.0 * ell - 1.0) * math.sqrt(
        float(np.sum(wy * ((1.0 + y) ** ell * fp) ** 2))
    )
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs)}


# ---------------------------------------------------------------------------
# Energy records
# ---------------------------------------------------------------------------

@dataclass
class EnergyRecord:
    t: float
    level: int
    interior: dict                    # per-index squared weighted norms
    boundary: float                   # Robin wall integral (0 for no-slip)
    outer_norm_sq: float              # ||U||^2_{H^{k+1}} at this time
    vorticity_gradient_sq: float      # ||omega_y||^2 at weight ell+1
    coefficients: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.interior.values()) + self.boundary


def _boundary_integral(traj, euler, level: int, k: int,
                       transforms: dict) -> float:
    """Robin wall integral: sum over tangential indices of the weighted
    squared wall trace of the transform, weight 1/(beta - u_yy/u_y)."""
    if math.isinf(traj.beta):
        return 0.0
    grid = traj.grid
    state = ShearState(traj.u_field(level))
    gap = traj.beta - state.curvature_ratio()[:, 0]
    total = 0.0
    for idx in index_family(k):
        if idx.n_y != 0:
            continue
        tr = transforms[idx].values.values[:, 0]
        total += grid.hx * float(np.sum(tr**2 / gap))
    return total


def energy_record(traj, euler: EulerData, level: int, k: int) -> EnergyRecord:
    """One full energy record at a stored level with enough history."""
    grid = traj.grid
    t = float(traj.times[level])
    if level < k + 1:
        raise ValueError(f"level {level} lacks history for k={k} time derivatives")
    hist = traj.history(level, k + 2)
    state = ShearState(hist.latest)

    interior = {}
    transforms: dict[MultiIndex, TransformedVorticity] = {}
    for idx in index_family(k):
        w = transformed_vorticity(traj.history(level, idx.n_t + 2), euler, idx)
        transforms[idx] = w
        interior[idx.label()] = weighted_norm(
            w.values, traj.params.ell + idx.n_y, mask=w.mask
        ) ** 2

    boundary = _boundary_integral(traj, euler, level, k, transforms)
    omega_y = dy(hist.latest, 2)
    om_y_norm = weighted_norm(omega_y, traj.params.ell + 1.0, mask=state.mask)

    coeffs = {
        "reaction_coeff_max": float(
            np.max(np.abs(reaction_coefficient(state, hist)[state.mask]))
        ),
        "kappa": state.kappa(),
        "masked_nodes": int((~state.mask).sum()),
    }
    if not math.isinf(traj.beta):
        q2 = wall_reaction_coefficient(traj, euler, level, traj.beta)
        coeffs["wall_reaction_coeff_max"] = float(np.max(np.abs(q2)))
        q3max = 0.0
        for idx in index_family(k):
            if idx.n_y == 0:
                q3 = wall_forcing_term(traj, euler, level, traj.beta, idx)
                q3max = max(q3max, float(np.max(np.abs(q3))))
        coeffs["wall_forcing_max"] = q3max
        wall_ratio = ShearState(traj.u_field(level)).curvature_ratio()[:, 0]
        coeffs["wall_curvature_max"] = float(np.max(wall_ratio))
        coeffs["delta_beta_hat"] = float(np.max(wall_ratio)) + 1.0

    return EnergyRecord(
        t=t,
        level=level,
        interior=interior,
        boundary=boundary,
        outer_norm_sq=euler_sobolev_norm(euler, t, k + 1, grid) ** 2,
        vorticity_gradient_sq=om_y_norm**2,
        coefficients=coeffs,
    )


def energy_series(traj, euler: EulerData, k: int) -> list[EnergyRecord]:
    """Records at every snapshot with enough trailing history.

    The first emitted record anchors the growth envelope: time derivatives
    of the data itself would require solving the equation hierarchy at
    t = 0, so early snapshots are skipped instead.
    """
    records = []
    for m, _, _ in traj.snapshots():
        if m < k + 2:
            continue
        records.append(energy_record(traj, euler, m, k))
    return records


@dataclass
class EnvelopeFit:
    anchor_t: float
    base: float                # E(anchor) + max ||U||^2
    rate: float                # fitted envelope rate (0 when never exceeded)
    blowup_time: float         # inf when rate is 0
    growth_factor: float       # sqrt(max E / base)
    envelope: list              # envelope values at record times
    margins: list               # envelope minus measured, nonnegative by fit


def fit_growth_envelope(records: list[EnergyRecord]) -> EnvelopeFit:
    """Smallest-rate comparison envelope dominating the measured energy.

    Envelope with exponent s: B * (1 - (s-1) r B^{(s-1)/2} (t-t0))^{-2/(s-1)}
    for the base B = E(t0) + max_t ||U||^2.  The fitted rate is the
    smallest r >= 0 keeping every record below the curve; the implied
    blow-up horizon is where the fitted curve diverges.
    """
    if not records:
        raise ValueError("no energy records to fit")
    s = ENVELOPE_EXPONENT
    t0 = records[0].t
    outer = max(r.outer_norm_sq for r in records)
    base = records[0].total + outer
    rate = 0.0
    if base > 0.0:
        for r in records[1:]:
            tau = r.t - t0
            e = r.total + outer
            if e > base and tau > 0.0:
                # invert the envelope at (tau, e) for the needed rate
                needed = (1.0 - (base / e) ** ((s - 1) / 2.0)) / (
                    (s - 1) * base ** ((s - 1) / 2.0) * tau
                )
                rate = max(rate, needed)
    blowup = math.inf
    if rate > 0.0:
        blowup = t0 + 1.0 / ((s - 1) * rate * base ** ((s - 1) / 2.0))
    env, margins = [], []
    for r in records:
        tau = r.t - t0
        denom = 1.0 - (s - 1) * rate * base ** ((s - 1) / 2.0) * tau
        val = base * denom ** (-2.0 / (s - 1)) if denom > 0 else math.inf
        env.append(val)
        margins.append(val - (r.total + outer))
    peak = max(r.total + outer for r in records)
    growth = math.sqrt(peak / base) if base > 0 else 1.0
    return EnvelopeFit(
        anchor_t=t0,
        base=base,
        rate=rate,
        blowup_time=blowup,
        growth_factor=growth,
        envelope=env,
        margins=margins,
    )


# ---------------------------------------------------------------------------
# Tail decay and wall traces
# ---------------------------------------------------------------------------

def decay_fit(omega: Field, y_lo: float, y_hi: float) -> tuple[float, float, float]:
    """Tail exponent and envelope constants of a vorticity sample."""
    grid = omega.grid
    if y_lo < grid.y_max / 4.0 - 1e-12 or y_hi > 3.0 * grid.y_max / 4.0 + 1e-12:
        raise ValueError("decay window must sit inside [Y/4, 3Y/4]")
    return fit_decay(omega.values, grid.y, y_lo, y_hi)


def beta_trace_norms(traj, k: int) -> dict:
    """Wall-trace Sobolev norms at the final time plus the Robin identity.

    Robin runs must satisfy omega|wall = beta * u|wall up to the stencil
    error, so the two trace norms scale consistently in beta.
    """
    grid = traj.grid
    level = len(traj.times) - 1
    u = traj.u_field(level)
    om = dy(u, 1)
    u_tr = u.values[:, 0]
    om_tr = om.values[:, 0]
    out = {
        "t": float(traj.times[level]),
        "u_trace_norm": trace_sobolev_norm(u_tr, grid, k),
        "omega_trace_norm": trace_sobolev_norm(om_tr, grid, k),
    }
    if not math.isinf(traj.beta):
        out["robin_identity_residual"] = float(
            np.max(np.abs(om_tr - traj.beta * u_tr))
        )
        out["robin_identity_scale"] = float(np.max(np.abs(om_tr)))
    return out


def v_growth_report(traj, euler: EulerData, level: int) -> dict:
    """Measured constant in the linear-growth bound for v.

    max |(1+y)^-1 v| against the weighted norm of d(u-U)/dx up to two
    spatial derivatives plus max |U_x|.
    """
    grid = traj.grid
    t = float(traj.times[level])
    u = traj.u_field(level)
    v = traj.v_field(level)
    lhs = float(np.max(np.abs(v.values) / (1.0 + grid.y)[None, :]))
    tilde = Field(grid, u.values - euler.value(t, grid.x)[:, None])
    tx = dx(tilde, 1)
    total = 0.0
    for n_x in range(3):
        for n_y in range(3 - n_x):
            f = tx
            if n_x:
                f = dx(f, n_x)
            if n_y:
                f = dy(f, n_y)
            total += weighted_norm(f, traj.params.ell + n_y) ** 2
    norm = math.sqrt(total)
    ux_max = float(np.max(np.abs(euler.derivative(0, 1, t, grid.x))))
    measured = (lhs - ux_max) / norm if norm > 0 else 0.0
    return {
        "t": t,
        "v_weighted_max": lhs,
        "shear_norm": norm,
        "outer_slope_max": ux_max,
        "measured_constant": measured,
    }
