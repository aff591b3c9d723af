import math

import numpy as np
import pytest

from slagflow.ambient import CalabiModel, CylindricalModel, FlatTorusCY


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def square_base_2pi():
    """Flat elliptic-curve base: side-2pi square lattice, unit Kahler matrix."""
    return FlatTorusCY.square(2 * math.pi, m=1)


@pytest.fixture(scope="session")
def calabi_n2(square_base_2pi):
    return CalabiModel(2, square_base_2pi, ell_min=1.1, ell_max=3.2)


@pytest.fixture(scope="session")
def calabi_n3():
    base = FlatTorusCY.square(2 * math.pi, m=2)
    return CalabiModel(3, base, ell_min=1.1, ell_max=3.2)


@pytest.fixture(scope="session")
def flat_t4():
    return FlatTorusCY.square(2 * math.pi, m=2)


@pytest.fixture(scope="session")
def cylinder_t3():
    return CylindricalModel(FlatTorusCY.square(2 * math.pi, m=1), gamma=1.0)


def random_calabi_points(model, rng, count, t_lo=None, t_hi=None):
    """Random chart points in the working annulus of a Calabi model."""
    n = model.n
    m = n - 1
    lo, hi = model.t_bounds
    t_lo = lo if t_lo is None else t_lo
    t_hi = hi if t_hi is None else t_hi
    z = rng.uniform(-2.0, 2.0, size=(count, 2 * m))
    t = rng.uniform(t_lo, t_hi, size=count)
    theta = rng.uniform(0, 2 * math.pi, size=count)
    return model.fiber_point(z, t, theta)
