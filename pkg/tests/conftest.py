"""Shared fixtures for the vsclab tests."""

import math

import pytest

from src.forward.operators import FarFieldOperator, NearFieldOperator
from src.forward.volume import SolverConfig
from src.spectral.lattice import Lattice
from src.spectral.phantoms import smooth_bump


@pytest.fixture
def lattice():
    """Small lattice |gamma|_inf <= 2 on its 5^3 grid."""
    return Lattice(max_degree=2)


@pytest.fixture
def solver_cfg():
    """Coarse solver grid with a tight Krylov tolerance."""
    return SolverConfig(grid_size=16, tolerance=1e-10)


@pytest.fixture
def bump(lattice):
    return smooth_bump(lattice, 0.2, 0.8 * math.pi)


@pytest.fixture
def near_operator(solver_cfg):
    return NearFieldOperator.create(solver_cfg, 8)


@pytest.fixture
def far_operator(solver_cfg):
    return FarFieldOperator.create(solver_cfg, 8)
