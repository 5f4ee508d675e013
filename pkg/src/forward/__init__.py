"""Forward scattering: Lippmann-Schwinger solves, near-field and far-field data."""

from .operators import (
    BornNearFieldOperator,
    FarFieldOperator,
    ForwardOperator,
    NearFieldOperator,
    far_field_data,
    frechet_adjoint_apply,
    near_field_data,
    operator_for,
)
from .scatter_data import ScatterData, data_norm
from .solver import LippmannSchwingerSolver, TotalField, solve_total_field
from .sphere import SpherePoints
from .volume import IncidentField, SolverConfig, VolumeGrid, fundamental_solution

__all__ = [
    "BornNearFieldOperator",
    "FarFieldOperator",
    "ForwardOperator",
    "IncidentField",
    "LippmannSchwingerSolver",
    "NearFieldOperator",
    "ScatterData",
    "SolverConfig",
    "SpherePoints",
    "TotalField",
    "VolumeGrid",
    "data_norm",
    "far_field_data",
    "frechet_adjoint_apply",
    "fundamental_solution",
    "near_field_data",
    "operator_for",
    "solve_total_field",
]
