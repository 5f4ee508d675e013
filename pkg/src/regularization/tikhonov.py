"""Sobolev-penalized Tikhonov regularization by projected gradient descent."""

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, Field
from pyee import EventEmitter

from ..core.errors import ConfigurationError, DomainViolationError
from ..forward.operators import ForwardOperator, operator_for
from ..forward.scatter_data import ScatterData
from ..forward.volume import SolverConfig
from ..spectral.lattice import ContrastField, project_to_D, sobolev_inner, sobolev_norm


logger = structlog.get_logger(__name__)

STATIONARITY_NOTE = "stationary point, not certified global"


@dataclass(frozen=True)
class TikhonovProblem:
    """Minimize (1/alpha)||F(f) - g||^2 + 1/2 ||f||^2_{H^m} over the admissible set."""

    data: ScatterData
    alpha: float
    penalty_m: float = 2.0
    enforce_domain: bool = True

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigurationError(f"alpha must be a positive number, got {self.alpha}")

    @property
    def kind(self) -> str:
        return self.data.kind


class TikhonovDiagnostics(BaseModel):
    iterations: int = 0
    objective_history: List[float] = Field(default_factory=list)
    misfit_sq: float = 0.0
    gradient_norm: float = 0.0
    converged: bool = False
    line_search_failed: bool = False
    note: str = STATIONARITY_NOTE


class TikhonovSolver:
    """
    Projected gradient descent in the H^m inner product with Armijo backtracking.

    The H^m gradient of the objective is (1/alpha) W^-1 G + f with W the Sobolev
    weights and G the coefficient gradient of the misfit. Trial steps start from
    a Barzilai-Borwein estimate. Every accepted iterate is published with its
    objective as an "iteration" event, a failed backtracking as "line_search_failed".
    """

    def __init__(
        self,
        operator: ForwardOperator,
        problem: TikhonovProblem,
        max_iterations: int = 100,
        tolerance: float = 1e-6,
        armijo: float = 1e-4,
        max_backtracks: int = 30,
    ):
        if operator.data_kind != problem.kind:
            raise ConfigurationError(f"{problem.kind} data cannot be fitted with a {operator.kind} operator")
        self.operator = operator
        self.problem = problem
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.armijo = armijo
        self.max_backtracks = max_backtracks
        self._emitter = EventEmitter()

    def on(self, event_type: str, callback: Callable) -> None:
        self._emitter.on(event_type, callback)

    def project(self, f: ContrastField) -> ContrastField:
        if not self.problem.enforce_domain:
            return f
        return project_to_D(f, plateau_radius=f.support_radius)

    def objective(self, f: ContrastField) -> Tuple[float, float]:
        """Objective value and squared misfit."""
        misfit_sq = self.operator.misfit(f, self.problem.data)
        penalty = 0.5 * sobolev_norm(f, self.problem.penalty_m) ** 2
        return misfit_sq / self.problem.alpha + penalty, misfit_sq

    def objective_gradient(self, f: ContrastField) -> Tuple[float, float, ContrastField]:
        """Objective, squared misfit and the H^m gradient."""
        m = self.problem.penalty_m
        misfit_sq, grad = self.operator.misfit_gradient(f, self.problem.data)
        weights = f.lattice.sobolev_weights(m)
        coeffs = grad.coeffs / (self.problem.alpha * weights) + f.coeffs
        value = misfit_sq / self.problem.alpha + 0.5 * sobolev_norm(f, m) ** 2
        return value, misfit_sq, f.with_coefficients(coeffs)

    def minimize(self, f_init: ContrastField) -> Tuple[ContrastField, TikhonovDiagnostics]:
        m = self.problem.penalty_m
        if self.problem.enforce_domain and not f_init.admissible:
            raise DomainViolationError("initial contrast is not flagged as admissible")

        f = f_init
        value, misfit_sq, grad = self.objective_gradient(f)
        diag = TikhonovDiagnostics(objective_history=[value], misfit_sq=misfit_sq)
        scale = max(1.0, sobolev_norm(grad, m))
        step = 1.0

        for k in range(self.max_iterations):
            pg_norm = sobolev_norm(f - self.project(f - grad), m)
            diag.gradient_norm = pg_norm
            if pg_norm <= self.tolerance * scale:
                diag.converged = True
                break

            accepted = None
            s = step
            for _ in range(self.max_backtracks):
                trial = self.project(f - grad.scaled(s))
                direction = trial - f
                slope = sobolev_inner(grad, direction, m).real
                if slope >= 0:
                    break
                trial_value, trial_misfit = self.objective(trial)
                if trial_value <= value + self.armijo * slope:
                    accepted = (trial, s)
                    break
                s *= 0.5

            if accepted is None:
                diag.line_search_failed = True
                logger.warning(f"line search failed at iteration {k}, objective {value:.6e}")
                self._emitter.emit("line_search_failed", {"iteration": k, "objective": value})
                break

            trial, s = accepted
            new_value, new_misfit, new_grad = self.objective_gradient(trial)
            diff = trial - f
            curvature = sobolev_inner(diff, new_grad - grad, m).real
            step = sobolev_norm(diff, m) ** 2 / curvature if curvature > 0 else 2.0 * s
            step = float(np.clip(step, 1e-8, 1e8))

            f, value, misfit_sq, grad = trial, new_value, new_misfit, new_grad
            diag.iterations = k + 1
            diag.objective_history.append(value)
            diag.misfit_sq = misfit_sq
            self._emitter.emit(
                "iteration",
                {"iteration": k + 1, "objective": value, "misfit_sq": misfit_sq, "step": s, "f": f},
            )
        else:
            diag.gradient_norm = sobolev_norm(f - self.project(f - grad), m)
            diag.converged = diag.gradient_norm <= self.tolerance * scale

        logger.debug(
            f"Tikhonov stopped after {diag.iterations} iterations, objective {value:.6e}, "
            f"projected gradient {diag.gradient_norm:.3e}"
        )
        return f, diag


def tikhonov_minimize(
    problem: TikhonovProblem,
    f_init: ContrastField,
    cfg: SolverConfig,
    operator: Optional[ForwardOperator] = None,
    **solver_options,
) -> Tuple[ContrastField, TikhonovDiagnostics]:
    """
    Approximate minimizer of the Tikhonov functional.

    Args:
        problem: Data, alpha, penalty index and domain switch
        f_init: Starting contrast, admissible when the domain is enforced
        cfg: Forward solver configuration
        operator: Forward operator; built from the data's point sets when omitted
        **solver_options: Passed to TikhonovSolver

    Returns:
        The final iterate and its diagnostics
    """
    operator = operator_for(problem.data, cfg) if operator is None else operator
    return TikhonovSolver(operator, problem, **solver_options).minimize(f_init)
