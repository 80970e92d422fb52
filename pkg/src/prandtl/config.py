"""Flat key = value run configuration with sections.

One file carries every knob of a run: grid, weights, outer flow, data,
stepping, outer iteration, diagnostics, and experiment parameters.  The
format is INI-style with no nesting so configs stay diffable; the hash of
the canonical dump is stamped into every emitted artifact.
"""

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, field

from prandtl.euler import EulerData
from prandtl.grid import Grid, WeightParams, build_grid
from prandtl.initial_data import InitialDataSpec
from prandtl.picard import PicardConfig
from prandtl.stepper import StepConfig

DEFAULT_CONFIG = """\
[grid]
nx = 32
ny = 161
x_period = 6.283185307179586
y_max = 40.0

[weights]
ell = 1.5
theta = 3.0
k_max = 2

[euler]
profile = uniform
amplitude = 0.01
decay_rate = 0.5
wavenumber = 1
shape_fraction = 0.0
width = 0.5

[initial_data]
epsilon = 0.01
beta = 50.0

[step]
dt = 0.015625
cfl_limit = 0.5
advection = upwind

[picard]
final_time = 1.0
max_iters = 30
tol = 1e-8
snapshot_stride = 8

[diagnostics]
k = 2
growth_factor = 2.0
decay_tolerance = 0.15
hardy_margin = 0.05
tail_tol = 1e-6

[experiments]
c_stab = 10.0
amplitudes = 0.001, 0.00025, 0.0000625
stability_p = 1
betas = 10, 40, 160, 640
normalize_trace_budget = true
seed = 0
"""


@dataclass
class RunConfig:
    grid: Grid
    weights: WeightParams
    euler: EulerData
    data_spec: InitialDataSpec
    step: StepConfig
    picard: PicardConfig
    k: int = 2
    growth_factor: float = 2.0
    decay_tolerance: float = 0.15
    hardy_margin: float = 0.05
    tail_tol: float = 1e-6
    c_stab: float = 10.0
    amplitudes: tuple = (1e-3, 2.5e-4, 6.25e-5)
    stability_p: int = 1
    betas: tuple = (10.0, 40.0, 160.0, 640.0)
    normalize_trace_budget: bool = True
    seed: int = 0
    raw_text: str = field(default="", repr=False)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.raw_text.encode()).hexdigest()[:16]


def _parse(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string(text)
    try:
        g = cp["grid"]
        grid = build_grid(g.getint("nx"), g.getint("ny"),
                          g.getfloat("x_period"), g.getfloat("y_max"))
        w = cp["weights"]
        weights = WeightParams(ell=w.getfloat("ell"), theta=w.getfloat("theta"),
                               k_max=w.getint("k_max"))
        e = cp["euler"]
        euler = EulerData(
            amplitude=e.getfloat("amplitude"),
            decay_rate=e.getfloat("decay_rate"),
            profile=e.get("profile"),
            wavenumber=e.getint("wavenumber", fallback=1),
            shape_fraction=e.getfloat("shape_fraction", fallback=0.0),
            width=e.getfloat("width", fallback=0.5),
            x_period=g.getfloat("x_period"),
            k_max=w.getint("k_max"),
        )
        d = cp["initial_data"]
        beta_raw = d.get("beta").strip().lower()
        beta = math.inf if beta_raw in ("inf", "dirichlet") else float(beta_raw)
        data_spec = InitialDataSpec(theta=w.getfloat("theta"),
                                    epsilon=d.getfloat("epsilon"), beta=beta)
        s = cp["step"]
        step = StepConfig(dt=s.getfloat("dt"), beta=beta,
                          cfl_limit=s.getfloat("cfl_limit", fallback=0.5),
                          advection=s.get("advection", fallback="upwind"))
        p = cp["picard"]
        picard = PicardConfig(
            final_time=p.getfloat("final_time"),
            max_iters=p.getint("max_iters", fallback=30),
            tol=p.getfloat("tol", fallback=1e-8),
            snapshot_stride=p.getint("snapshot_stride", fallback=8),
        )
        diag = cp["diagnostics"] if cp.has_section("diagnostics") else {}
        exp = cp["experiments"] if cp.has_section("experiments") else {}
    except (configparser.Error, KeyError, ValueError) as err:
        raise ConfigError(f"bad configuration: {err}") from err

    def _floats(raw: str) -> tuple:
        return tuple(float(tok) for tok in raw.replace(",", " ").split())

    cfg = RunConfig(
        grid=grid,
        weights=weights,
        euler=euler,
        data_spec=data_spec,
        step=step,
        picard=picard,
        k=int(diag.get("k", weights.k_max)),
        growth_factor=float(diag.get("growth_factor", 2.0)),
        decay_tolerance=float(diag.get("decay_tolerance", 0.15)),
        hardy_margin=float(diag.get("hardy_margin", 0.05)),
        tail_tol=float(diag.get("tail_tol", 1e-6)),
        c_stab=float(exp.get("c_stab", 10.0)),
        amplitudes=_floats(exp.get("amplitudes", "1e-3 2.5e-4 6.25e-5")),
        stability_p=int(exp.get("stability_p", 1)),
        betas=_floats(exp.get("betas", "10 40 160 640")),
        normalize_trace_budget=str(exp.get("normalize_trace_budget", "true")).lower()
        in ("1", "true", "yes"),
        seed=int(exp.get("seed", 0)),
        raw_text=text,
    )
    _cross_validate(cfg)
    return cfg


class ConfigError(ValueError):
    pass


def _cross_validate(cfg: RunConfig) -> None:
    if cfg.k > cfg.weights.k_max:
        raise ConfigError(
            f"diagnostics order k={cfg.k} exceeds k_max={cfg.weights.k_max}"
        )
    n_steps = cfg.picard.final_time / cfg.step.dt
    if abs(n_steps - round(n_steps)) > 1e-9:
        raise ConfigError("final_time must be an integer multiple of dt")
    # Advection stability estimate from the outer amplitude (the data rides
    # on U, so ~2x its amplitude bounds the speed).
    speed = 2.0 * cfg.euler.amplitude * (1.0 + abs(cfg.euler.shape_fraction))
    if speed > 0:
        dt_max = cfg.step.cfl_limit * cfg.grid.hx / speed
        if cfg.step.dt > dt_max:
            raise ConfigError(
                f"dt={cfg.step.dt} exceeds the advective estimate {dt_max:.3e}"
            )


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return _parse(fh.read())


def load_default() -> RunConfig:
    return _parse(DEFAULT_CONFIG)


def dump_default(path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(DEFAULT_CONFIG)


def parse_text(text: str) -> RunConfig:
    return _parse(text)
