import numpy as np
import pytest

from pvelab import PhysParams, assemble_forms, build_mesh
from pvelab.operators import Operators


@pytest.fixture(scope="session")
def mesh1d_64():
    return build_mesh(1, 64)


@pytest.fixture(scope="session")
def visco_ops(mesh1d_64):
    """Compressible visco setup shared by several modules."""
    params = PhysParams(lambda_e=1.0, mu=1.0, alpha=1.0, c0=0.1, kappa=1.0,
                        delta1=0.5)
    return Operators(assemble_forms(mesh1d_64, params))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
