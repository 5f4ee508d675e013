"""Scattering data matrices with their quadrature point sets."""

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from ..core.errors import FormatError
from .sphere import SpherePoints


DataKind = Literal["near_field", "far_field"]


@dataclass(frozen=True, eq=False)
class ScatterData:
    """
    Complex data over (source or incidence) x (receiver or observation) nodes.

    Rows belong to sources (near field) or incident directions (far field);
    columns to receivers or observation directions.
    """

    kind: str
    kappa: float
    sources: SpherePoints
    receivers: SpherePoints
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("near_field", "far_field"):
            raise FormatError(f"unknown data kind '{self.kind}'")
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.sources.size, self.receivers.size):
            raise FormatError(
                f"data matrix has shape {values.shape}, point sets need "
                f"({self.sources.size}, {self.receivers.size})"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def radius(self) -> float:
        """Measurement radius R for near-field data, 1 for far-field data."""
        return self.sources.radius

    def compatible(self, other: "ScatterData") -> bool:
        return (
            self.kind == other.kind
            and math.isclose(self.kappa, other.kappa)
            and np.array_equal(self.sources.content(), other.sources.content())
            and np.array_equal(self.receivers.content(), other.receivers.content())
        )

    def _check(self, other: "ScatterData") -> None:
        if not self.compatible(other):
            raise FormatError("scatter data sets use different configurations")

    def with_values(self, values: np.ndarray) -> "ScatterData":
        return replace(self, values=values)

    def zeros_like(self) -> "ScatterData":
        return self.with_values(np.zeros_like(self.values))

    def __sub__(self, other: "ScatterData") -> "ScatterData":
        self._check(other)
        return self.with_values(self.values - other.values)

    def __add__(self, other: "ScatterData") -> "ScatterData":
        self._check(other)
        return self.with_values(self.values + other.values)

    def scaled(self, factor: complex) -> "ScatterData":
        return self.with_values(self.values * factor)

    def inner(self, other: "ScatterData") -> complex:
        """Quadrature L^2 inner product over the product of the two spheres."""
        self._check(other)
        w = np.outer(self.sources.weights, self.receivers.weights)
        return complex(np.sum(w * self.values * np.conj(other.values)))


def data_norm(d: ScatterData) -> float:
    """Quadrature approximation of the L^2 norm over the product of the measurement spheres."""
    w = np.outer(d.sources.weights, d.receivers.weights)
    return float(np.sqrt(np.sum(w * np.abs(d.values) ** 2)))
