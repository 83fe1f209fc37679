import numpy as np
import pytest

from skcone.expr import parse_prepotential


@pytest.fixture(scope="session")
def fs2():
    return parse_prepotential("i*(z0^2 + z1^2)", 2)


@pytest.fixture(scope="session")
def fs3():
    return parse_prepotential("i*(z0^2 + z1^2 + z2^2)", 3)


@pytest.fixture(scope="session")
def stu():
    return parse_prepotential("z1*z2*z3/z0", 4)


@pytest.fixture(scope="session")
def sig3():
    # quadratic prepotential of signature (2, 1)
    return parse_prepotential("i*(z0^2 + z1^2 - z2^2)", 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


STU_BASE = np.array([1.0, 1j, 1j, 1j])
STU_BASE_NEG = np.array([1.0, -1j, 1j, 1j])


def stu_points(count, seed=5, base=None, radius=0.12):
    """Deterministic admissible perturbations around the STU base point."""
    gen = np.random.default_rng(seed)
    base = STU_BASE if base is None else base
    pts = []
    while len(pts) < count:
        step = gen.standard_normal(4) + 1j * gen.standard_normal(4)
        pts.append(base + radius * step / np.linalg.norm(step))
    return pts
