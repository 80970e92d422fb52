import math

import pytest

from prandtl.config import load_default
from prandtl.initial_data import make_initial_data
from prandtl.picard import solve


@pytest.fixture(scope="session")
def default_cfg():
    return load_default()


@pytest.fixture(scope="session")
def default_data(default_cfg):
    return make_initial_data(default_cfg.data_spec, default_cfg.euler,
                             default_cfg.grid)


@pytest.fixture(scope="session")
def default_traj(default_cfg, default_data):
    """The shipped small-data configuration, solved once per session."""
    return solve(default_data.u0, default_cfg.euler, default_cfg.grid,
                 default_cfg.step, default_cfg.picard, default_cfg.weights)
