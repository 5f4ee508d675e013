"""Complex frequencies zeta with zeta.zeta = kappa^2 and their orthonormal frames."""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core.errors import AdmissibilityError


_BASIS = np.eye(3)


@dataclass(frozen=True, eq=False)
class FramePair:
    """Two unit vectors orthogonal to each other and to gamma."""

    d1: np.ndarray
    d2: np.ndarray

    def rotation(self) -> np.ndarray:
        """Orthogonal matrix with columns d1, d2, d1 x d2."""
        return np.column_stack([self.d1, self.d2, np.cross(self.d1, self.d2)])


def frame_vectors(gamma) -> FramePair:
    """
    Deterministic orthonormal pair orthogonal to gamma.

    d1 is the normalized cross product of gamma with the first standard basis
    vector not parallel to gamma, d2 = gamma x d1 / |gamma|. For gamma = 0 the
    pair is (e1, e2).
    """
    g = np.asarray(gamma, dtype=float)
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        return FramePair(d1=_BASIS[0].copy(), d2=_BASIS[1].copy())
    for e in _BASIS:
        cross = np.cross(g, e)
        cross_norm = float(np.linalg.norm(cross))
        if cross_norm > 1e-12 * norm:
            d1 = cross / cross_norm
            break
    d2 = np.cross(g, d1) / norm
    d2 = d2 / np.linalg.norm(d2)
    return FramePair(d1=d1, d2=d2)


@dataclass(frozen=True, eq=False)
class ComplexFrequency:
    """
    zeta = center + offset with zeta.zeta = kappa^2 (bilinear product).

    Keeping the real center -gamma/2 apart from the offset lets a pair
    (zeta, eta) with opposite offsets sum to -gamma exactly. The frame's first
    axis is parallel to Im zeta.
    """

    center: np.ndarray
    offset: np.ndarray
    t: float
    kappa: float
    frame: np.ndarray

    def __post_init__(self):
        zeta = self.zeta
        scale = max(1.0, self.t ** 2, float(np.dot(self.center, self.center)))
        defect = abs(complex(np.dot(zeta, zeta)) - self.kappa ** 2)
        if defect > 1e-12 * scale:
            raise AdmissibilityError(f"zeta.zeta differs from kappa^2 by {defect:.3e}")
        if abs(float(np.linalg.norm(zeta.imag)) - self.t) > 1e-12 * max(1.0, self.t):
            raise AdmissibilityError("t does not equal |Im zeta|")

    @property
    def zeta(self) -> np.ndarray:
        return self.center + self.offset

    def rotated(self) -> np.ndarray:
        """Components of zeta in the frame."""
        return self.frame.T @ self.zeta

    @classmethod
    def from_vector(cls, zeta, kappa: float) -> "ComplexFrequency":
        """Wrap an arbitrary zeta, building a frame with Im zeta along the first axis."""
        z = np.asarray(zeta, dtype=complex)
        a, b = z.real, z.imag
        t = float(np.linalg.norm(b))
        e1 = b / t if t > 0 else _BASIS[0].copy()
        rest = a - np.dot(a, e1) * e1
        if np.linalg.norm(rest) > 1e-14:
            e2 = rest / np.linalg.norm(rest)
        else:
            e2 = frame_vectors(e1).d1
        frame = np.column_stack([e1, e2, np.cross(e1, e2)])
        return cls(center=np.zeros(3), offset=z, t=t, kappa=kappa, frame=frame)


def pair_sum(zeta: ComplexFrequency, eta: ComplexFrequency) -> np.ndarray:
    """zeta + eta, summing centers and offsets separately."""
    return (zeta.center + eta.center) + (zeta.offset + eta.offset)


def zeta_eta(gamma, t: float, kappa: float) -> Tuple[ComplexFrequency, ComplexFrequency]:
    """
    The pair zeta_t = -gamma/2 + i t d1 + r d2 and eta_t = -gamma/2 - i t d1 - r d2.

    r = sqrt(kappa^2 + t^2 - |gamma|^2/4); both share the frame (d1, d2, gamma_hat).

    Raises:
        AdmissibilityError: If the radicand is negative
    """
    g = np.asarray(gamma, dtype=float)
    radicand = kappa ** 2 + t ** 2 - float(np.dot(g, g)) / 4.0
    if radicand < 0:
        raise AdmissibilityError(
            f"|gamma|={np.linalg.norm(g):.4g} exceeds 2 sqrt(kappa^2 + t^2) = {2 * math.sqrt(kappa ** 2 + t ** 2):.4g}"
        )
    pair = frame_vectors(g)
    r = math.sqrt(radicand)
    offset = 1j * t * pair.d1 + r * pair.d2
    center = -g / 2.0
    frame = pair.rotation()
    zeta = ComplexFrequency(center=center, offset=offset, t=t, kappa=kappa, frame=frame)
    eta = ComplexFrequency(center=center.copy(), offset=-offset, t=t, kappa=kappa, frame=frame)
    return zeta, eta


def t_zero(C_m: float, kappa: float, R_prime: float, M_em: float) -> float:
    """Admissibility threshold t0 = 2 kappa^2 (R'/pi) M_em C_m."""
    for name, value in (("C_m", C_m), ("kappa", kappa), ("R_prime", R_prime), ("M_em", M_em)):
        if not value > 0:
            raise AdmissibilityError(f"{name} must be positive, got {value}")
    return 2.0 * kappa ** 2 * (R_prime / math.pi) * M_em * C_m


def admissible_t(sup_norm: float, kappa: float, R_prime: float) -> float:
    """Smallest t with a contracting GOS fixed-point map, 2 kappa^2 (R'/pi) ||f||_inf."""
    return 2.0 * kappa ** 2 * (R_prime / math.pi) * sup_norm


def gamma_admissible(gamma, t: float, kappa: float, t0: Optional[float] = None) -> bool:
    g = np.asarray(gamma, dtype=float)
    if t0 is not None and t < t0:
        return False
    return float(np.linalg.norm(g)) <= 2.0 * math.sqrt(kappa ** 2 + t ** 2)
