"""Krylov solver for the Lippmann-Schwinger equation u = u^i - kappa^2 V[f u]."""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import structlog
from scipy.sparse.linalg import LinearOperator, gmres

from ..core.errors import ConvergenceError, DomainViolationError
from ..spectral.lattice import ContrastField
from .volume import IncidentField, SolverConfig, VolumeGrid


logger = structlog.get_logger(__name__)


@lru_cache(maxsize=8)
def volume_grid(cfg: SolverConfig) -> VolumeGrid:
    """Shared read-only grid and kernel symbol for a configuration."""
    return VolumeGrid.from_config(cfg)


@dataclass(frozen=True, eq=False)
class TotalField:
    """Total field on the ball voxels together with the contrast samples it was solved for."""

    grid: VolumeGrid = field(repr=False)
    incident: Optional[IncidentField]
    contrast: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    incident_values: np.ndarray = field(repr=False)
    residual: float = 0.0
    iterations: int = 0

    def scattered_on_grid(self) -> np.ndarray:
        """Scattered field -kappa^2 V[f u] on the full periodization grid."""
        kappa = self.grid.config.kappa
        return -(kappa ** 2) * self.grid.convolve(self.grid.embed(self.contrast * self.values))


class LippmannSchwingerSolver:
    """
    Solves (I + kappa^2 V Q) u = u^i on the voxels of B_pi.

    V is the periodic convolution with the fundamental solution truncated at
    radius 2R; Q multiplies by the contrast samples. V is complex symmetric,
    which the adjoint computations rely on.
    """

    def __init__(self, cfg: SolverConfig):
        """
        Initialize the solver.

        Args:
            cfg: Solver configuration
        """
        self.cfg = cfg
        self.grid = volume_grid(cfg)

    def contrast_samples(self, f: ContrastField, require_admissible: bool = True) -> np.ndarray:
        """Evaluate the contrast on the ball voxels."""
        if require_admissible and not f.admissible:
            raise DomainViolationError(
                f"contrast is not flagged in D (in_D={f.in_D}, supported_in_ball={f.supported_in_ball}, "
                f"support_violation={f.support_violation:.2e})"
            )
        return f.evaluate(self.grid.points)

    def apply(self, q: np.ndarray, u: np.ndarray) -> np.ndarray:
        """(I + kappa^2 V Q) u."""
        return u + self.cfg.kappa ** 2 * self.grid.volume_potential(q * u)

    def residual(self, q: np.ndarray, u: np.ndarray, rhs: np.ndarray) -> float:
        """Relative residual ||u + kappa^2 V[q u] - rhs|| / ||rhs||."""
        norm = float(np.linalg.norm(rhs))
        if norm == 0.0:
            return float(np.linalg.norm(u))
        return float(np.linalg.norm(self.apply(q, u) - rhs)) / norm

    def solve_system(self, q: np.ndarray, rhs: np.ndarray) -> tuple:
        """
        Solve (I + kappa^2 V Q) u = rhs with restarted GMRES.

        Args:
            q: Contrast on the ball voxels
            rhs: Right-hand side on the ball voxels

        Returns:
            Tuple (u, relative residual, iterations)

        Raises:
            ConvergenceError: If the true residual exceeds the tolerance
        """
        if not np.any(q) or not np.any(rhs):
            return np.array(rhs, dtype=complex), 0.0, 0

        n = self.grid.n_unknowns
        operator = LinearOperator((n, n), matvec=lambda u: self.apply(q, u), dtype=complex)
        iterations = 0

        def iteration_counter(_residual_norm):
            nonlocal iterations
            iterations += 1

        u, info = gmres(
            operator,
            rhs,
            rtol=0.5 * self.cfg.tolerance,
            atol=0.0,
            restart=self.cfg.restart,
            maxiter=self.cfg.max_iterations,
            callback=iteration_counter,
            callback_type="pr_norm",
        )
        residual = self.residual(q, u, rhs)
        if residual > self.cfg.tolerance:
            logger.warning(f"GMRES stopped with info={info}, residual {residual:.3e} after {iterations} iterations")
            raise ConvergenceError("Lippmann-Schwinger solve did not converge", residual, iterations)
        logger.debug(f"Lippmann-Schwinger solve: {iterations} iterations, residual {residual:.3e}")
        return u, residual, iterations

    def solve(
        self,
        f: ContrastField,
        inc: IncidentField,
        contrast: Optional[np.ndarray] = None,
    ) -> TotalField:
        """
        Solve for the total field of one incident field.

        Args:
            f: Contrast, must be flagged in D unless raw samples are given
            inc: Incident field
            contrast: Optional raw contrast samples on the ball voxels

        Returns:
            The total field on the ball voxels
        """
        q = self.contrast_samples(f) if contrast is None else np.asarray(contrast, dtype=complex)
        rhs = inc.evaluate(self.grid.points)
        u, residual, iterations = self.solve_system(q, rhs)
        return TotalField(
            grid=self.grid,
            incident=inc,
            contrast=q,
            values=u,
            incident_values=rhs,
            residual=residual,
            iterations=iterations,
        )

    def solve_many(self, q: np.ndarray, rhs_list: Sequence[np.ndarray], map_fn=map) -> list:
        """Solve for several right-hand sides; map_fn may dispatch to an executor."""
        return list(map_fn(lambda rhs: self.solve_system(q, rhs), rhs_list))


def solve_total_field(
    f: ContrastField,
    inc: IncidentField,
    cfg: SolverConfig,
    contrast: Optional[np.ndarray] = None,
) -> TotalField:
    """Total field of the perturbed Helmholtz problem for one incident field."""
    return LippmannSchwingerSolver(cfg).solve(f, inc, contrast)
