"""Solver configuration, incident fields and the FFT-periodized volume grid."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import AdmissibilityError


SUPPORT_RADIUS = math.pi

# |xi - kappa| below this uses the removable-singularity limit of the kernel symbol
SYMBOL_RESONANCE_GAP = 1e-6


class SolverConfig(BaseModel):
    """Discretization and Krylov settings shared by the forward and GOS solvers."""

    model_config = ConfigDict(frozen=True)

    grid_size: int = Field(default=32, ge=8)
    kappa: float = Field(default=1.0, gt=0)
    radius_R: float = Field(default=1.2 * math.pi)
    periodization_radius: float = Field(default=0.0, ge=0)
    tolerance: float = Field(default=1e-8, gt=0, lt=1)
    max_iterations: int = Field(default=200, ge=1)
    restart: int = Field(default=60, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _default_periodization(cls, data):
        if isinstance(data, dict) and not data.get("periodization_radius"):
            data = {**data, "periodization_radius": 2.0 * float(data.get("radius_R", 1.2 * math.pi))}
        return data

    @model_validator(mode="after")
    def _check_geometry(self) -> "SolverConfig":
        if not self.radius_R > SUPPORT_RADIUS:
            raise ValueError(f"radius_R={self.radius_R} must exceed pi so sources avoid the scatterer")
        if self.periodization_radius < 2.0 * self.radius_R - 1e-12:
            raise ValueError(
                f"periodization_radius={self.periodization_radius} must be at least 2R={2 * self.radius_R}"
            )
        return self

    @property
    def truncation_radius(self) -> float:
        """Radius L = 2R of the truncated fundamental solution."""
        return 2.0 * self.radius_R

    def with_updates(self, **changes) -> "SolverConfig":
        data = self.model_dump()
        data.update(changes)
        if "radius_R" in changes and "periodization_radius" not in changes:
            data["periodization_radius"] = 0.0
        return SolverConfig(**data)


def fundamental_solution(x: np.ndarray, y: np.ndarray, kappa: float) -> np.ndarray:
    """
    Outgoing Helmholtz fundamental solution exp(i kappa |x-y|) / (4 pi |x-y|).

    Args:
        x: Points of shape (n, 3)
        y: Points of shape (m, 3)
        kappa: Wavenumber

    Returns:
        Matrix of shape (n, m)
    """
    x = np.asarray(x, dtype=float).reshape(-1, 3)
    y = np.asarray(y, dtype=float).reshape(-1, 3)
    dist = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2)
    return np.exp(1j * kappa * dist) / (4.0 * math.pi * dist)


def truncated_kernel_symbol(xi_norm: np.ndarray, kappa: float, L: float) -> np.ndarray:
    """
    Fourier transform of the fundamental solution restricted to |x| < L.

    [1 - e^{i kappa L}(cos(|xi| L) - i kappa sin(|xi| L)/|xi|)] / (|xi|^2 - kappa^2),
    continued through its removable singularities at |xi| = 0 and |xi| = kappa.
    """
    s = np.asarray(xi_norm, dtype=float)
    phase = np.exp(1j * kappa * L)
    out = np.empty(s.shape, dtype=complex)

    at_zero = s == 0.0
    resonant = (np.abs(s - kappa) < SYMBOL_RESONANCE_GAP) & ~at_zero
    regular = ~(at_zero | resonant)

    sr = s[regular]
    out[regular] = (1.0 - phase * (np.cos(sr * L) - 1j * kappa * np.sin(sr * L) / sr)) / (sr ** 2 - kappa ** 2)
    out[at_zero] = (1.0 - phase * (1.0 - 1j * kappa * L)) / (-(kappa ** 2))
    out[resonant] = (1j * L - 1j * phase * math.sin(kappa * L) / kappa) / (2.0 * kappa)
    return out


@dataclass(frozen=True)
class IncidentField:
    """Point-source or plane-wave incident field."""

    kind: str
    kappa: float
    source: Optional[tuple] = None
    direction: Optional[tuple] = None

    def __post_init__(self):
        if self.kind == "point_source":
            if self.source is None or np.linalg.norm(self.source) <= SUPPORT_RADIUS:
                raise AdmissibilityError(f"point source {self.source} must lie outside B_pi")
        elif self.kind == "plane_wave":
            if self.direction is None or abs(np.linalg.norm(self.direction) - 1.0) > 1e-12:
                raise AdmissibilityError(f"plane-wave direction {self.direction} is not a unit vector")
        else:
            raise AdmissibilityError(f"unknown incident field kind '{self.kind}'")

    @classmethod
    def point_source(cls, y, kappa: float) -> "IncidentField":
        return cls(kind="point_source", kappa=kappa, source=tuple(float(v) for v in y))

    @classmethod
    def plane_wave(cls, d, kappa: float) -> "IncidentField":
        d = np.asarray(d, dtype=float)
        d = d / np.linalg.norm(d)
        return cls(kind="plane_wave", kappa=kappa, direction=tuple(float(v) for v in d))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Incident field at points of shape (n, 3)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        if self.kind == "plane_wave":
            return np.exp(1j * self.kappa * pts @ np.asarray(self.direction))
        return fundamental_solution(pts, np.asarray(self.source), self.kappa)[:, 0]

    def key(self) -> str:
        """Stable text key used for cache lookups."""
        vec = self.source if self.kind == "point_source" else self.direction
        return f"{self.kind}:{self.kappa!r}:" + ",".join(f"{v:.17g}" for v in vec)


@dataclass(frozen=True, eq=False)
class VolumeGrid:
    """
    The cube [-Rp, Rp)^3 sampled with G points per axis and the voxels inside B_pi.

    Unknowns of the integral equation live on the ball voxels only; the full grid
    carries the periodic convolution with the truncated kernel.
    """

    config: SolverConfig
    axis: np.ndarray = field(repr=False)
    spacing: float
    mask: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    symbol: np.ndarray = field(repr=False)

    @classmethod
    def from_config(cls, cfg: SolverConfig) -> "VolumeGrid":
        G = cfg.grid_size
        h = 2.0 * cfg.periodization_radius / G
        axis = -cfg.periodization_radius + h * np.arange(G)
        x1, x2, x3 = np.meshgrid(axis, axis, axis, indexing="ij")
        mask = x1 ** 2 + x2 ** 2 + x3 ** 2 <= SUPPORT_RADIUS ** 2
        points = np.stack([x1[mask], x2[mask], x3[mask]], axis=1)
        k = 2.0 * math.pi * np.fft.fftfreq(G, d=h)
        k1, k2, k3 = np.meshgrid(k, k, k, indexing="ij")
        xi = np.sqrt(k1 ** 2 + k2 ** 2 + k3 ** 2)
        symbol = truncated_kernel_symbol(xi, cfg.kappa, cfg.truncation_radius)
        for arr in (axis, mask, points, symbol):
            arr.flags.writeable = False
        return cls(config=cfg, axis=axis, spacing=h, mask=mask, points=points, symbol=symbol)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    @property
    def n_unknowns(self) -> int:
        return int(self.points.shape[0])

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Extend ball-voxel values by zero to the full grid."""
        full = np.zeros(self.mask.shape, dtype=complex)
        full[self.mask] = values
        return full

    def convolve(self, density: np.ndarray) -> np.ndarray:
        """Periodic convolution of a full-grid density with the truncated kernel."""
        return np.fft.ifftn(np.fft.fftn(density) * self.symbol)

    def volume_potential(self, values: np.ndarray) -> np.ndarray:
        """V applied to ball-voxel values, restricted back to the ball voxels."""
        return self.convolve(self.embed(values))[self.mask]
