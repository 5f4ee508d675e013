"""Geometrical optics solutions u = exp(i zeta.x)(1 + v) on a half-shifted periodic lattice."""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import structlog
from scipy.sparse.linalg import LinearOperator, gmres

from ..core.errors import AdmissibilityError, ConvergenceError
from ..forward.volume import SolverConfig
from ..spectral.lattice import ContrastField
from .frequencies import ComplexFrequency, admissible_t


logger = structlog.get_logger(__name__)

# Relative residual of the PDE accepted for a GOS solve
GOS_RESIDUAL_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class GosGrid:
    """
    Cube [-R', R')^3 in the rotated coordinates y = O^T x with its shifted dual lattice.

    The dual lattice is (2 pi / P)(k + (1/2, 0, 0)), P = 2R', so functions on it
    are anti-periodic along the first axis, which carries Im zeta.
    """

    R_prime: float
    size: int
    spacing: float
    axis: np.ndarray = field(repr=False)
    xi: tuple = field(repr=False)
    phase: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, R_prime: float, size: int) -> "GosGrid":
        period = 2.0 * R_prime
        h = period / size
        axis = -R_prime + h * np.arange(size)
        k = np.fft.fftfreq(size) * size
        xi1 = 2.0 * math.pi / period * (k + 0.5)
        xi2 = 2.0 * math.pi / period * k
        phase = np.exp(1j * math.pi * axis / period)
        return cls(R_prime=R_prime, size=size, spacing=h, axis=axis, xi=(xi1, xi2, xi2.copy()), phase=phase)

    @property
    def shape(self) -> tuple:
        return (self.size,) * 3

    def points(self) -> np.ndarray:
        y1, y2, y3 = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.stack([y1.ravel(), y2.ravel(), y3.ravel()], axis=1)

    def radius(self) -> np.ndarray:
        y1, y2, y3 = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.sqrt(y1 ** 2 + y2 ** 2 + y3 ** 2)

    def symbol(self, zeta_rot: np.ndarray) -> np.ndarray:
        """-xi.xi - 2 zeta.xi on the shifted lattice."""
        x1 = self.xi[0][:, None, None]
        x2 = self.xi[1][None, :, None]
        x3 = self.xi[2][None, None, :]
        return -(x1 ** 2 + x2 ** 2 + x3 ** 2) - 2.0 * (zeta_rot[0] * x1 + zeta_rot[1] * x2 + zeta_rot[2] * x3)

    def to_spectrum(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values * np.conj(self.phase)[:, None, None])

    def from_spectrum(self, spectrum: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(spectrum) * self.phase[:, None, None]

    def l2_norm(self, values: np.ndarray, radius: float, weight: Optional[np.ndarray] = None) -> float:
        """Grid-quadrature L^2 norm over |y| <= radius."""
        inside = self.radius() <= radius
        vals = values if weight is None else values * weight
        return float(np.sqrt(self.spacing ** 3 * np.sum(np.abs(vals[inside]) ** 2)))


@dataclass(frozen=True, eq=False)
class GosSolution:
    """A solution u = exp(i zeta.x)(1 + v) of the perturbed Helmholtz equation."""

    freq: ComplexFrequency
    grid: GosGrid = field(repr=False)
    contrast: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    symbol_min: float
    norms: Dict[str, float] = field(default_factory=dict)

    def recompute_norms(self) -> Dict[str, float]:
        return compute_norms(self.grid, self.freq, self.v)

    def growth_weight(self, shift: float = 0.0) -> np.ndarray:
        """|exp(i zeta.x)| exp(-shift) = exp(-Im(zeta_1) y1 - shift) on the grid."""
        y1 = self.grid.axis[:, None, None]
        growth = self.freq.rotated()[0].imag
        return np.broadcast_to(np.exp(-growth * y1 - shift), self.grid.shape)


def compute_norms(grid: GosGrid, freq: ComplexFrequency, v: np.ndarray) -> Dict[str, float]:
    """
    L^2(B_R') norms of v and u.

    ||u|| itself overflows for large t, so it is reported together with its
    logarithm and the scaled value ||u|| exp(-R' t).
    """
    R = grid.R_prime
    y1 = grid.axis[:, None, None]
    growth = freq.rotated()[0].imag
    # exponent -growth*y1 - t R' stays nonpositive on the cube
    scaled_weight = np.exp(-growth * y1 - freq.t * R)
    u_scaled = grid.l2_norm(1.0 + v, R, scaled_weight)
    u_log = math.log(u_scaled) + R * freq.t if u_scaled > 0 else -math.inf
    return {
        "v_l2": grid.l2_norm(v, R),
        "u_l2_scaled": u_scaled,
        "u_l2_log": u_log,
        "u_l2": math.exp(u_log) if u_log < 700 else math.inf,
    }


def _contrast_on_grid(f: ContrastField, grid: GosGrid, frame: np.ndarray) -> np.ndarray:
    points = grid.points() @ frame.T
    return f.evaluate(points).reshape(grid.shape)


def solve_gos(
    f: ContrastField,
    freq: ComplexFrequency,
    cfg: SolverConfig,
    residual_tolerance: float = GOS_RESIDUAL_TOLERANCE,
    check_admissible: bool = True,
) -> GosSolution:
    """
    Solve Delta v + 2i zeta.grad v = kappa^2 f (1 + v) on the periodized cube of side 2R'.

    The fixed-point form v = G[kappa^2 f (1 + v)], G the inverse of the symbol on
    the shifted lattice, is solved with GMRES. With t >= 2 kappa^2 (R'/pi)||f||_inf
    the map contracts with factor 1/2. The PDE residual is recomputed spectrally.

    Args:
        f: Contrast supported in B_pi
        freq: Complex frequency, Im zeta along the first frame axis
        cfg: Grid size, wavenumber and Krylov settings; R' = 2 radius_R
        residual_tolerance: Accepted relative PDE residual
        check_admissible: Enforce the admissibility bound on t

    Returns:
        The GOS solution with recorded norms

    Raises:
        AdmissibilityError: If t is below the admissibility bound
        ConvergenceError: If the PDE residual exceeds residual_tolerance
    """
    R_prime = 2.0 * cfg.radius_R
    if not math.isclose(freq.kappa, cfg.kappa):
        raise AdmissibilityError(f"frequency built for kappa={freq.kappa}, solver uses kappa={cfg.kappa}")
    sup = f.sup_norm()
    t_min = admissible_t(sup, cfg.kappa, R_prime)
    if check_admissible and freq.t < t_min * (1.0 - 1e-12):
        raise AdmissibilityError(f"t={freq.t:.4g} is below the admissibility bound {t_min:.4g}")

    grid = GosGrid.create(R_prime, cfg.grid_size)
    zeta_rot = freq.rotated()
    if abs(zeta_rot[0].imag) < abs(freq.t) * (1.0 - 1e-9) and freq.t > 0:
        raise AdmissibilityError("Im zeta is not aligned with the first frame axis")
    symbol = grid.symbol(zeta_rot)
    symbol_min = float(np.min(np.abs(symbol)))
    fq = cfg.kappa ** 2 * _contrast_on_grid(f, grid, freq.frame)

    if not np.any(fq):
        v = np.zeros(grid.shape, dtype=complex)
        return GosSolution(
            freq=freq, grid=grid, contrast=fq, v=v, residual=0.0, iterations=0,
            symbol_min=symbol_min, norms=compute_norms(grid, freq, v),
        )
    if symbol_min == 0.0:
        raise ConvergenceError("GOS symbol vanishes on the shifted lattice", math.inf, 0, symbol_min)

    def green(values: np.ndarray) -> np.ndarray:
        return grid.from_spectrum(grid.to_spectrum(values) / symbol)

    n = int(np.prod(grid.shape))

    def matvec(x: np.ndarray) -> np.ndarray:
        vol = x.reshape(grid.shape)
        return (vol - green(fq * vol)).ravel()

    rhs = green(fq).ravel()
    operator = LinearOperator((n, n), matvec=matvec, dtype=complex)
    iterations = 0

    def iteration_counter(_residual_norm):
        nonlocal iterations
        iterations += 1

    solution, info = gmres(
        operator,
        rhs,
        rtol=min(1e-10, 0.5 * cfg.tolerance),
        atol=0.0,
        restart=cfg.restart,
        maxiter=cfg.max_iterations,
        callback=iteration_counter,
        callback_type="pr_norm",
    )
    v = solution.reshape(grid.shape)
    residual = pde_residual(grid, symbol, fq, v)
    if residual > residual_tolerance:
        logger.warning(f"GOS solve stopped with info={info}, residual {residual:.3e}, symbol min {symbol_min:.3e}")
        raise ConvergenceError("GOS solve did not converge", residual, iterations, symbol_min)
    logger.debug(f"GOS solve t={freq.t:.4g}: {iterations} iterations, residual {residual:.3e}")
    return GosSolution(
        freq=freq,
        grid=grid,
        contrast=fq,
        v=v,
        residual=residual,
        iterations=iterations,
        symbol_min=symbol_min,
        norms=compute_norms(grid, freq, v),
    )


def pde_residual(grid: GosGrid, symbol: np.ndarray, fq: np.ndarray, v: np.ndarray) -> float:
    """
    Relative residual of Delta u + kappa^2 u - kappa^2 f u divided by exp(i zeta.x).

    Equals ||(Delta + 2i zeta.grad) v - kappa^2 f (1+v)|| / ||kappa^2 f (1+v)|| on the grid.
    """
    source = fq * (1.0 + v)
    lhs = grid.from_spectrum(symbol * grid.to_spectrum(v))
    denom = float(np.linalg.norm(source))
    if denom == 0.0:
        return float(np.linalg.norm(lhs))
    return float(np.linalg.norm(lhs - source)) / denom


def born_remainder(f: ContrastField, freq: ComplexFrequency, cfg: SolverConfig) -> np.ndarray:
    """One-step approximation v_1 = G[kappa^2 f] on the GOS grid."""
    grid = GosGrid.create(2.0 * cfg.radius_R, cfg.grid_size)
    symbol = grid.symbol(freq.rotated())
    fq = cfg.kappa ** 2 * _contrast_on_grid(f, grid, freq.frame)
    return grid.from_spectrum(grid.to_spectrum(fq) / symbol)
