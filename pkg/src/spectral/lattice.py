"""Fourier-lattice representation of contrasts on the cube Q=(-pi, pi)^3."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import LatticeError


logger = structlog.get_logger(__name__)

# Normalization of f^(gamma) = (2 pi)^(-3/2) int_Q f(x) exp(-i gamma.x) dx
FOURIER_SCALE = (2.0 * math.pi) ** 1.5

IM_TOLERANCE = 1e-10
RE_TOLERANCE = 1e-10
SUPPORT_TOLERANCE = 1e-8


class Lattice(BaseModel):
    """Truncated dual lattice |gamma|_inf <= N together with its sampling grid on Q."""

    model_config = ConfigDict(frozen=True)

    max_degree: int = Field(ge=1)
    grid_size: int = Field(default=0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _default_grid(cls, data):
        # grid_size defaults to 2N+1, where grid and coefficients are in bijection
        if isinstance(data, dict) and not data.get("grid_size"):
            data = {**data, "grid_size": 2 * int(data.get("max_degree", 1)) + 1}
        return data

    @model_validator(mode="after")
    def _check_aliasing(self) -> "Lattice":
        if self.grid_size < 2 * self.max_degree + 1:
            raise ValueError(
                f"grid_size={self.grid_size} aliases retained modes; "
                f"need grid_size >= 2N+1 = {2 * self.max_degree + 1}"
            )
        return self

    @property
    def width(self) -> int:
        return 2 * self.max_degree + 1

    @property
    def shape(self) -> tuple:
        return (self.width,) * 3

    @property
    def grid_shape(self) -> tuple:
        return (self.grid_size,) * 3

    def modes(self) -> np.ndarray:
        """Integer modes -N..N along one axis."""
        return np.arange(-self.max_degree, self.max_degree + 1)

    def gamma_norm_sq(self) -> np.ndarray:
        """|gamma|^2 for every retained mode, indexed like the coefficient array."""
        k = self.modes().astype(float)
        return k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2

    def sobolev_weights(self, m: float) -> np.ndarray:
        """(1 + |gamma|^2)^m for every retained mode."""
        return (1.0 + self.gamma_norm_sq()) ** m

    def grid_axis(self) -> np.ndarray:
        """Sample positions -pi + 2 pi j / G along one axis."""
        return -math.pi + 2.0 * math.pi * np.arange(self.grid_size) / self.grid_size

    def grid_points(self) -> tuple:
        """Meshgrid (x1, x2, x3) of the sampling grid."""
        axis = self.grid_axis()
        return np.meshgrid(axis, axis, axis, indexing="ij")

    def index_of(self, gamma) -> tuple:
        """Array index of the mode gamma in the coefficient array."""
        gamma = tuple(int(g) for g in gamma)
        if max(abs(g) for g in gamma) > self.max_degree:
            raise LatticeError(f"mode {gamma} lies outside the lattice |gamma|_inf <= {self.max_degree}")
        return tuple(g + self.max_degree for g in gamma)

    def _fft_index(self) -> np.ndarray:
        return np.mod(self.modes(), self.grid_size)

    def _sign(self) -> np.ndarray:
        # exp(-i gamma.(-pi)) on each axis
        s = np.where(self.modes() % 2 == 0, 1.0, -1.0)
        return s[:, None, None] * s[None, :, None] * s[None, None, :]


def analyze(grid_samples: np.ndarray, lattice: Lattice) -> "ContrastField":
    """
    Compute the Fourier coefficients of grid samples on Q.

    The trapezoidal rule for (2 pi)^(-3/2) int_Q f exp(-i gamma.x) dx is evaluated
    with one FFT; modes beyond the lattice are discarded.

    Args:
        grid_samples: Complex samples on the lattice grid, shape (G, G, G)
        lattice: Target lattice

    Returns:
        The corresponding ContrastField
    """
    samples = np.asarray(grid_samples, dtype=complex)
    if samples.shape != lattice.grid_shape:
        raise LatticeError(
            f"grid samples have shape {samples.shape}, lattice expects {lattice.grid_shape}"
        )
    spectrum = np.fft.fftn(samples)
    idx = lattice._fft_index()
    block = spectrum[np.ix_(idx, idx, idx)]
    coeffs = block * lattice._sign() * (FOURIER_SCALE / lattice.grid_size ** 3)
    return ContrastField.from_coefficients(coeffs, lattice)


def synthesize(coeffs: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Evaluate the truncated Fourier series on the lattice grid."""
    G = lattice.grid_size
    padded = np.zeros(lattice.grid_shape, dtype=complex)
    idx = lattice._fft_index()
    padded[np.ix_(idx, idx, idx)] = np.asarray(coeffs) * lattice._sign()
    return np.fft.ifftn(padded) * (G ** 3 / FOURIER_SCALE)


@dataclass(frozen=True, eq=False)
class ContrastField:
    """
    A contrast f = 1 - n held by its lattice coefficients.

    Grid samples are derived from the coefficients; the admissibility flags are
    computed from those samples when the field is built.
    """

    lattice: Lattice
    coeffs: np.ndarray
    support_radius: float = math.pi
    in_D: bool = False
    supported_in_ball: bool = False
    support_violation: float = 0.0
    _samples: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def from_coefficients(
        cls, coeffs: np.ndarray, lattice: Lattice, support_radius: float = math.pi
    ) -> "ContrastField":
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.shape != lattice.shape:
            raise LatticeError(f"coefficient array has shape {coeffs.shape}, expected {lattice.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise LatticeError("coefficient array contains non-finite values")
        coeffs.flags.writeable = False
        samples = synthesize(coeffs, lattice)
        samples.flags.writeable = False

        peak = float(np.max(np.abs(samples))) if samples.size else 0.0
        in_D = bool(
            np.max(samples.imag) <= IM_TOLERANCE and np.max(samples.real) <= 1.0 + RE_TOLERANCE
        )
        x1, x2, x3 = lattice.grid_points()
        outside = np.sqrt(x1 ** 2 + x2 ** 2 + x3 ** 2) > support_radius
        violation = float(np.max(np.abs(samples[outside]))) if np.any(outside) else 0.0
        supported = violation <= SUPPORT_TOLERANCE * peak
        return cls(
            lattice=lattice,
            coeffs=coeffs,
            support_radius=support_radius,
            in_D=in_D,
            supported_in_ball=supported,
            support_violation=violation,
            _samples=samples,
        )

    @classmethod
    def from_samples(cls, samples: np.ndarray, lattice: Lattice) -> "ContrastField":
        return analyze(samples, lattice)

    @classmethod
    def zeros(cls, lattice: Lattice) -> "ContrastField":
        return cls.from_coefficients(np.zeros(lattice.shape, dtype=complex), lattice)

    @property
    def samples(self) -> np.ndarray:
        """Values on the lattice grid."""
        if self._samples is None:
            return synthesize(self.coeffs, self.lattice)
        return self._samples

    @property
    def admissible(self) -> bool:
        """True when the field is flagged as a member of the admissible set."""
        return self.in_D and self.supported_in_ball

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def coefficient(self, gamma) -> complex:
        return complex(self.coeffs[self.lattice.index_of(gamma)])

    def sup_norm(self) -> float:
        """Maximum of |f| over the lattice grid."""
        return float(np.max(np.abs(self.samples)))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """
        Evaluate the Fourier series at arbitrary points, extended by zero outside the support ball.

        Args:
            points: Array of shape (..., 3)

        Returns:
            Complex values of shape points.shape[:-1]
        """
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 3)
        values = np.zeros(flat.shape[0], dtype=complex)
        inside = np.einsum("pi,pi->p", flat, flat) <= self.support_radius ** 2
        if np.any(inside) and not self.is_zero:
            sub = flat[inside]
            k = self.lattice.modes().astype(float)
            e1 = np.exp(1j * np.outer(k, sub[:, 0]))
            e2 = np.exp(1j * np.outer(k, sub[:, 1]))
            e3 = np.exp(1j * np.outer(k, sub[:, 2]))
            values[inside] = np.einsum("abc,ap,bp,cp->p", self.coeffs, e1, e2, e3, optimize=True) / FOURIER_SCALE
        return values.reshape(pts.shape[:-1])

    def with_coefficients(self, coeffs: np.ndarray) -> "ContrastField":
        return ContrastField.from_coefficients(coeffs, self.lattice, self.support_radius)

    def __add__(self, other: "ContrastField") -> "ContrastField":
        self._check_compatible(other)
        return self.with_coefficients(self.coeffs + other.coeffs)

    def __sub__(self, other: "ContrastField") -> "ContrastField":
        self._check_compatible(other)
        return self.with_coefficients(self.coeffs - other.coeffs)

    def scaled(self, factor: complex) -> "ContrastField":
        return self.with_coefficients(self.coeffs * factor)

    def _check_compatible(self, other: "ContrastField") -> None:
        if other.lattice != self.lattice:
            raise LatticeError("contrast fields live on different lattices")


def adjoint_evaluate(lattice: Lattice, points: np.ndarray, values: np.ndarray) -> np.ndarray:
    """
    Adjoint of ContrastField.evaluate for points inside the support ball.

    Returns the coefficient array sum_j values_j exp(-i gamma.x_j) / (2 pi)^(3/2).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    vals = np.asarray(values, dtype=complex).reshape(-1)
    k = lattice.modes().astype(float)
    e1 = np.exp(-1j * np.outer(k, pts[:, 0]))
    e2 = np.exp(-1j * np.outer(k, pts[:, 1]))
    e3 = np.exp(-1j * np.outer(k, pts[:, 2]))
    return np.einsum("p,ap,bp,cp->abc", vals, e1, e2, e3, optimize=True) / FOURIER_SCALE


def sobolev_inner(f: ContrastField, g: ContrastField, m: float) -> complex:
    """H^m inner product sum (1+|gamma|^2)^m f^(gamma) conj(g^(gamma))."""
    f._check_compatible(g)
    weights = f.lattice.sobolev_weights(m)
    return complex(np.sum(weights * f.coeffs * np.conj(g.coeffs)))


def sobolev_norm(f: ContrastField, m: float) -> float:
    """Truncated-lattice H^m norm of f."""
    weights = f.lattice.sobolev_weights(m)
    return float(np.sqrt(np.sum(weights * np.abs(f.coeffs) ** 2)))


def l2_inner(f: ContrastField, g: ContrastField) -> complex:
    """L^2(Q) inner product, equal to the coefficient inner product by Parseval."""
    return sobolev_inner(f, g, 0.0)


def truncation_diagnostics(f: ContrastField, s: float) -> dict:
    """
    Report how much of the H^s energy sits on the outermost lattice shell.

    A large share indicates the truncated norms underestimate the full-lattice ones.
    """
    lattice = f.lattice
    energy = lattice.sobolev_weights(s) * np.abs(f.coeffs) ** 2
    k = np.abs(lattice.modes())
    linf = np.maximum(np.maximum(k[:, None, None], k[None, :, None]), k[None, None, :])
    total = float(np.sum(energy))
    shell = float(np.sum(energy[linf == lattice.max_degree]))
    return {
        "s": s,
        "norm_sq": total,
        "outer_shell_share": shell / total if total > 0 else 0.0,
        "max_degree": lattice.max_degree,
    }


def smooth_cutoff(radius: np.ndarray, plateau: float, outer: float = math.pi) -> np.ndarray:
    """C-infinity radial cutoff: 1 for r <= plateau, 0 for r >= outer.

    A plateau reaching the outer radius degenerates to the indicator of r <= outer.
    """
    if plateau >= outer:
        return (np.asarray(radius, dtype=float) <= outer).astype(float)
    u = np.clip((outer - np.asarray(radius, dtype=float)) / (outer - plateau), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def project_to_D(f: ContrastField, plateau_radius: float = 0.9 * math.pi) -> ContrastField:
    """
    Map a contrast onto the admissible set on the lattice grid.

    Real parts are clamped to (-inf, 1], imaginary parts to (-inf, 0], and the
    result is multiplied by a smooth cutoff vanishing outside B_pi. When
    grid_size == 2N+1 the grid and coefficient pictures are in bijection and the
    projected samples are reproduced exactly.

    With plateau_radius equal to the support radius the cutoff is the hard ball
    mask and the map is the idempotent grid projection onto the admissible set.
    """
    samples = f.samples
    clamped = np.minimum(samples.real, 1.0) + 1j * np.minimum(samples.imag, 0.0)
    x1, x2, x3 = f.lattice.grid_points()
    radius = np.sqrt(x1 ** 2 + x2 ** 2 + x3 ** 2)
    projected = analyze(clamped * smooth_cutoff(radius, plateau_radius, f.support_radius), f.lattice)
    if not projected.admissible:
        logger.debug(
            f"projection left residual violation {projected.support_violation:.2e}; "
            f"grid_size={f.lattice.grid_size} exceeds 2N+1"
        )
    return projected
