"""Quadrature point sets on spheres."""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..core.errors import ConfigurationError


SphereScheme = Literal["gauss_product", "fibonacci"]


@dataclass(frozen=True, eq=False)
class SpherePoints:
    """Nodes on the sphere of a given radius with positive quadrature weights."""

    points: np.ndarray
    weights: np.ndarray
    radius: float
    scheme: str

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def directions(self) -> np.ndarray:
        """Unit vectors of the nodes."""
        return self.points / self.radius

    @property
    def measure(self) -> float:
        return 4.0 * math.pi * self.radius ** 2

    def antipode_index(self) -> np.ndarray:
        """Index of -x for every node x; raises when the set is not closed under antipodes."""
        diff = self.points[:, None, :] + self.points[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        idx = np.argmin(dist, axis=1)
        if np.max(dist[np.arange(self.size), idx]) > 1e-9 * max(self.radius, 1.0):
            raise ValueError(f"{self.scheme} point set is not closed under antipodes")
        return idx

    def content(self) -> np.ndarray:
        """Stacked (x, y, z, weight) rows, used for hashing and serialization."""
        return np.column_stack([self.points, self.weights])

    @classmethod
    def create(
        cls,
        n_points: int,
        radius: float = 1.0,
        scheme: SphereScheme = "gauss_product",
        azimuth_shift: float = 0.0,
    ) -> "SpherePoints":
        """
        Build a quasi-uniform point set with at least n_points nodes.

        gauss_product uses k Gauss-Legendre nodes in cos(theta) and 2k uniform
        azimuths, 2k^2 nodes in total with k the smallest integer reaching
        n_points; fibonacci places exactly n_points nodes on a spiral with equal
        weights. azimuth_shift rotates the set by that fraction of the azimuth
        step (or of the golden angle for fibonacci).
        """
        if n_points < 6:
            raise ConfigurationError(f"sphere point sets need at least 6 nodes, got {n_points}")
        if radius <= 0:
            raise ConfigurationError(f"sphere radius must be positive, got {radius}")
        if scheme == "gauss_product":
            k = max(2, math.ceil(math.sqrt(n_points / 2.0)))
            return cls.gauss_product(k, radius, azimuth_shift)
        if scheme == "fibonacci":
            return cls.fibonacci(n_points, radius, azimuth_shift)
        raise ConfigurationError(f"unknown sphere scheme '{scheme}'")

    @classmethod
    def gauss_product(cls, k: int, radius: float = 1.0, azimuth_shift: float = 0.0) -> "SpherePoints":
        cos_theta, w_theta = np.polynomial.legendre.leggauss(k)
        phi = math.pi * (np.arange(2 * k) + 0.5 + azimuth_shift) / k
        ct, ph = np.meshgrid(cos_theta, phi, indexing="ij")
        wt = np.repeat(w_theta, 2 * k) * (math.pi / k)
        st = np.sqrt(1.0 - ct ** 2)
        dirs = np.stack([(st * np.cos(ph)).ravel(), (st * np.sin(ph)).ravel(), ct.ravel()], axis=1)
        return cls(points=radius * dirs, weights=radius ** 2 * wt, radius=radius, scheme="gauss_product")

    @classmethod
    def fibonacci(cls, n: int, radius: float = 1.0, azimuth_shift: float = 0.0) -> "SpherePoints":
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        golden = math.pi * (3.0 - math.sqrt(5.0))
        phi = golden * (np.arange(n) + azimuth_shift)
        r = np.sqrt(1.0 - z ** 2)
        dirs = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        weights = np.full(n, 4.0 * math.pi * radius ** 2 / n)
        return cls(points=radius * dirs, weights=weights, radius=radius, scheme="fibonacci")
