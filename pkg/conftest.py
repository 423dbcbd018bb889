import textwrap

import numpy as np
import pytest

from services.fluid_model import MaterialLaw
from services.scenario import parse_config


@pytest.fixture
def unit_law():
    """A*gamma = 1 so that c_s = 1 at rho = 1; zeta = eta = tau = 1."""
    return MaterialLaw.constant(A=0.5, gamma=2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def make_config():
    def _make(text: str = "", *overrides: str):
        return parse_config(textwrap.dedent(text), overrides)
    return _make


@pytest.fixture
def blowup_text():
    """Spherical bulk data with F(0) = 1.1 x threshold; c_v = sqrt(2), max rho0 = 2."""
    return textwrap.dedent("""\
        system = bulk
        geometry = spherical

        [material]
        A = 0.5
        gamma = 2.0
        zeta = 1.0
        tau = 1.0

        [reference]
        rho_bar = 1.0
        R = 1.0

        [profile]
        a = 1.0
        target_F_ratio = 1.1

        [grid]
        n_cells = 256
        x_max = 4.0

        [run]
        t_end = 0.1
    """)
