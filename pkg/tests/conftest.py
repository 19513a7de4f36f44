import numpy as np
import pytest
from hypothesis import settings

from gibc.assembly import Discretization, ImpedanceField
from gibc.geometry import build_annulus_mesh, make_circle, make_ellipse

settings.register_profile("gibc", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("gibc")

K = 9.0
R = 0.8


@pytest.fixture(scope="session")
def ellipse_disc():
    curve = make_ellipse(0.4, 0.3, 128)
    return Discretization.build(curve, build_annulus_mesh(curve, R, 12), K)


@pytest.fixture(scope="session")
def circle_disc():
    """Mie configuration, boundary condition without rescaling."""
    curve = make_circle(0.35, 256)
    return Discretization.build(curve, build_annulus_mesh(curve, R, 24), K, rescaled=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def constant_field(n, lam=1j, mu=1.0):
    return ImpedanceField.constant(n, lam, mu)
