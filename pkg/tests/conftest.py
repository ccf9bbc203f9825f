import numpy as np
import pytest

from bidomain.conductivity import isotropic_tensors
from bidomain.eigenbasis import compute_eigenbasis
from bidomain.grid import build_grid
from bidomain.ionic import IonicModel
from bidomain.operators import BidomainOperator, VNorms, assemble_elliptic


def make_operator(grid, sigma_i=1.0, sigma_e=2.0):
    ai = assemble_elliptic(grid, isotropic_tensors(grid, sigma_i), "intra")
    ae = assemble_elliptic(grid, isotropic_tensors(grid, sigma_e), "extra")
    return BidomainOperator(ai, ae, grid)


@pytest.fixture(scope="session")
def grid65():
    return build_grid(1, 1.0, 65)


@pytest.fixture(scope="session")
def op65(grid65):
    return make_operator(grid65)


@pytest.fixture(scope="session")
def vnorms65(grid65):
    return VNorms(grid65)


@pytest.fixture(scope="session")
def basis65(op65):
    return compute_eigenbasis(op65, 16)


@pytest.fixture(scope="session")
def fhn():
    return IonicModel("fitzhugh_nagumo", a=0.1, eps=0.01, k=1.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
