"""Geometrical optics solutions and the estimates built on them."""

from .checks import (
    C1Accumulator,
    IdentityBoundReport,
    calibrate_c3,
    identity_bound_check,
    low_freq_coeff_estimate,
    near_field_distance,
    validate_c3,
    verify_gos_bounds,
)
from .faddeev import GosGrid, GosSolution, born_remainder, solve_gos
from .frequencies import ComplexFrequency, FramePair, frame_vectors, pair_sum, t_zero, zeta_eta

__all__ = [
    "C1Accumulator",
    "ComplexFrequency",
    "FramePair",
    "GosGrid",
    "GosSolution",
    "IdentityBoundReport",
    "born_remainder",
    "calibrate_c3",
    "frame_vectors",
    "identity_bound_check",
    "low_freq_coeff_estimate",
    "near_field_distance",
    "pair_sum",
    "solve_gos",
    "t_zero",
    "validate_c3",
    "verify_gos_bounds",
    "zeta_eta",
]
