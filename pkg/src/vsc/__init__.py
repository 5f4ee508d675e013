"""Variational source conditions, stability estimates and the near-to-far estimate, checked numerically."""

from .near_far import (
    NearFarFit,
    NearFarReport,
    fit_near_to_far,
    near_to_far_bound,
    near_to_far_check,
    psi_composition_far,
    validate_near_to_far,
)
from .proof_trace import ProofTrace, proof_parameter_trace, theorem_constant
from .source_condition import (
    CalibrationReport,
    VscCase,
    calibrate_constant,
    calibrate_from_cases,
    evaluate_cases,
    perturbation_family,
    stability_check,
    validate_constant,
    vsc_check,
)

__all__ = [
    "CalibrationReport",
    "NearFarFit",
    "NearFarReport",
    "ProofTrace",
    "VscCase",
    "calibrate_constant",
    "calibrate_from_cases",
    "evaluate_cases",
    "fit_near_to_far",
    "near_to_far_bound",
    "near_to_far_check",
    "perturbation_family",
    "proof_parameter_trace",
    "psi_composition_far",
    "stability_check",
    "theorem_constant",
    "validate_constant",
    "validate_near_to_far",
    "vsc_check",
]
