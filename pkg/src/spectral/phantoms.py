"""Test contrasts: smooth bumps, single modes, random band-limited fields and ball indicators."""

import math
from typing import Optional, Sequence

import numpy as np

from ..core.errors import LatticeError
from .lattice import FOURIER_SCALE, ContrastField, Lattice, analyze


def bump_profile(radius: np.ndarray, a: float) -> np.ndarray:
    """C-infinity radial bump exp(1 - 1/(1 - (r/a)^2)), equal to 1 at the origin and 0 for r >= a."""
    r = np.asarray(radius, dtype=float) / a
    inside = r < 1.0
    out = np.zeros_like(r)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def smooth_bump(
    lattice: Lattice,
    amplitude: complex = 0.2,
    radius: float = 0.8 * math.pi,
    center: Sequence[float] = (0.0, 0.0, 0.0),
) -> ContrastField:
    """
    Smooth compactly supported contrast amplitude * bump(|x - center| / radius).

    The bump is sampled on the lattice grid and analyzed, so with the default grid
    the grid values are reproduced exactly and the admissibility flags follow
    from the amplitude: Re <= 1 and Im <= 0.

    Args:
        lattice: Lattice carrying the field
        amplitude: Peak value of the contrast
        radius: Support radius, |center| + radius must not exceed pi
        center: Center of the bump

    Returns:
        The bump as a ContrastField
    """
    c = np.asarray(center, dtype=float)
    if float(np.linalg.norm(c)) + radius > math.pi + 1e-12:
        raise LatticeError(f"bump of radius {radius} at {tuple(c)} leaves the ball B_pi")
    x1, x2, x3 = lattice.grid_points()
    r = np.sqrt((x1 - c[0]) ** 2 + (x2 - c[1]) ** 2 + (x3 - c[2]) ** 2)
    return analyze(amplitude * bump_profile(r, radius), lattice)


def single_mode(lattice: Lattice, gamma, amplitude: complex = 1.0) -> ContrastField:
    """Field with exactly one nonzero coefficient f^(gamma) = amplitude."""
    coeffs = np.zeros(lattice.shape, dtype=complex)
    coeffs[lattice.index_of(gamma)] = amplitude
    return ContrastField.from_coefficients(coeffs, lattice)


def plane_mode_samples(lattice: Lattice, gamma) -> np.ndarray:
    """Grid samples of exp(i gamma.x)."""
    x1, x2, x3 = lattice.grid_points()
    g = [float(v) for v in gamma]
    return np.exp(1j * (g[0] * x1 + g[1] * x2 + g[2] * x3))


def random_band_limited(
    lattice: Lattice,
    seed: int,
    decay: float = 2.0,
    scale: float = 1.0,
    real: bool = False,
) -> ContrastField:
    """
    Seeded random field with spectrum decaying like (1+|gamma|^2)^(-decay/2).

    Args:
        lattice: Lattice carrying the field
        seed: Seed for numpy's default_rng
        decay: Spectral decay exponent
        scale: Overall multiplier
        real: Return a real-valued field (Hermitian coefficients)

    Returns:
        The random field
    """
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(lattice.shape) + 1j * rng.standard_normal(lattice.shape)
    coeffs *= scale * lattice.sobolev_weights(-decay / 2.0)
    if real:
        # f^(-gamma) = conj f^(gamma) for real fields
        coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1, ::-1, ::-1]))
    return ContrastField.from_coefficients(coeffs, lattice)


def enveloped_random(
    lattice: Lattice,
    seed: int,
    amplitude: float = 0.05,
    radius: float = 0.8 * math.pi,
    imaginary_part: float = 0.0,
) -> ContrastField:
    """
    Real random band-limited texture multiplied by a smooth bump envelope.

    The result is supported in B_radius on the grid; a nonpositive constant
    imaginary_part times the envelope can be added to model absorption.
    """
    if imaginary_part > 0:
        raise LatticeError("absorbing part must be nonpositive to stay admissible")
    texture = random_band_limited(lattice, seed, real=True).samples.real
    peak = float(np.max(np.abs(texture))) or 1.0
    x1, x2, x3 = lattice.grid_points()
    envelope = bump_profile(np.sqrt(x1 ** 2 + x2 ** 2 + x3 ** 2), radius)
    samples = (amplitude * texture / peak + 1j * imaginary_part) * envelope
    return analyze(samples, lattice)


def _corrected_voxel_weights(centers: np.ndarray, radius: float, h: float, nodes: int) -> np.ndarray:
    # per axis the kernel is (4/3) box_h - (1/3) box_2h
    x, w = np.polynomial.legendre.leggauss(nodes)
    pieces = ((-h, -0.5 * h, -1.0 / (6.0 * h)), (-0.5 * h, 0.5 * h, 7.0 / (6.0 * h)), (0.5 * h, h, -1.0 / (6.0 * h)))
    s = np.concatenate([0.5 * (lo + hi) + 0.5 * (hi - lo) * x for lo, hi, _ in pieces])
    ws = np.concatenate([0.5 * (hi - lo) * w * density for lo, hi, density in pieces])

    y1 = centers[:, 0, None] + s[None, :]
    y2 = centers[:, 1, None] + s[None, :]
    rho2 = y1[:, :, None] ** 2 + y2[:, None, :] ** 2
    zeta = np.sqrt(np.clip(radius ** 2 - rho2, 0.0, None))
    c3 = centers[:, 2, None, None]

    def overlap(half_width: float) -> np.ndarray:
        return np.clip(np.minimum(c3 + half_width, zeta) - np.maximum(c3 - half_width, -zeta), 0.0, None)

    # the chord along the third axis is integrated exactly
    axial = 4.0 / (3.0 * h) * overlap(0.5 * h) - 1.0 / (6.0 * h) * overlap(h)
    return np.einsum("pjk,j,k->p", axial, ws, ws)


def ball_indicator_samples(
    points: np.ndarray,
    radius: float,
    value: complex,
    spacing: Optional[float] = None,
    nodes: int = 6,
) -> np.ndarray:
    """
    Samples of value * 1_{|x| <= radius} at voxel centers.

    With a voxel spacing h the indicator is averaged against the tensor kernel
    (4/3) box_h - (1/3) box_2h instead of being point sampled. The kernel has
    unit mass, vanishing first and second moments and a transform that vanishes
    on the nonzero dual lattice, so voxel sums of the samples against smooth
    functions match the ball integrals to O(h^3). Plain volume fractions carry
    a factor 1 - |k|^2 h^2 / 24 at frequency k.

    Args:
        points: Voxel centers of shape (n, 3)
        radius: Ball radius
        value: Constant contrast inside the ball
        spacing: Voxel edge length, None for point sampling
        nodes: Gauss-Legendre nodes per kernel piece on the two quadrature axes

    Returns:
        Complex samples of shape (n,)
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    norms = np.sqrt(np.einsum("pi,pi->p", pts, pts))
    if spacing is None:
        return value * (norms <= radius).astype(complex)
    h = float(spacing)
    reach = math.sqrt(3.0) * h
    weights = np.where(norms + reach <= radius, 1.0, 0.0)
    band = np.abs(norms - radius) < reach
    if np.any(band):
        weights[band] = _corrected_voxel_weights(pts[band], radius, h, nodes)
    return value * weights.astype(complex)


def constant_mode_value(c: complex) -> complex:
    """Zeroth coefficient of the constant field c on Q."""
    return FOURIER_SCALE * c
