"""Tikhonov regularization with Sobolev penalties and logarithmic parameter rules."""

from .experiments import ExperimentLog, ExperimentRecord, add_noise, fit_through_origin, rate_sweep
from .psi import (
    PsiFunction,
    alpha_rule,
    mu_exponent,
    psi_derivative,
    psi_eval,
    rate_abscissa,
    rate_bound,
    stability_bound,
)
from .tikhonov import TikhonovDiagnostics, TikhonovProblem, TikhonovSolver, tikhonov_minimize

__all__ = [
    "ExperimentLog",
    "ExperimentRecord",
    "PsiFunction",
    "TikhonovDiagnostics",
    "TikhonovProblem",
    "TikhonovSolver",
    "add_noise",
    "alpha_rule",
    "fit_through_origin",
    "mu_exponent",
    "psi_derivative",
    "psi_eval",
    "rate_abscissa",
    "rate_bound",
    "rate_sweep",
    "stability_bound",
    "tikhonov_minimize",
]
