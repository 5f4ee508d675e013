"""Logarithmic index functions and the a-priori parameter rule."""

import math
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import ConfigurationError


ArrayLike = Union[float, np.ndarray]


def mu_exponent(m: float, s: float) -> float:
    """Rate exponent min{1, (s - m)/(m + 3/2)} for smoothness 3/2 < m < s."""
    if not 1.5 < m < s:
        raise ConfigurationError(f"need 3/2 < m < s, got m={m}, s={s}")
    return min(1.0, (s - m) / (m + 1.5))


class PsiFunction(BaseModel):
    """
    psi(t) = C (ln(3 + 1/t))^(-e) with e = 2 mu (near field) or 2 mu theta (far field).

    C is A for the near-field variant and B for the far-field variant.
    """

    model_config = ConfigDict(frozen=True)

    variant: Literal["near", "far"] = "near"
    constant: float = Field(default=1.0, gt=0)
    mu: float = Field(default=4.0 / 7.0, gt=0, le=1)
    theta: Optional[float] = Field(default=None, gt=0, lt=1)

    @model_validator(mode="after")
    def _check_theta(self) -> "PsiFunction":
        if self.variant == "far" and self.theta is None:
            raise ValueError("far-field index function needs theta in (0, 1)")
        if self.variant == "near" and self.theta is not None:
            raise ValueError("theta only applies to the far-field index function")
        return self

    @classmethod
    def near(cls, A: float, mu: float) -> "PsiFunction":
        return cls(variant="near", constant=A, mu=mu)

    @classmethod
    def far(cls, B: float, mu: float, theta: float) -> "PsiFunction":
        return cls(variant="far", constant=B, mu=mu, theta=theta)

    @property
    def exponent(self) -> float:
        return 2.0 * self.mu * (self.theta if self.variant == "far" else 1.0)

    def with_constant(self, constant: float) -> "PsiFunction":
        return self.model_copy(update={"constant": constant})

    def unit(self) -> "PsiFunction":
        """Same shape with constant 1."""
        return self.with_constant(1.0)


def _log_term(t: np.ndarray) -> np.ndarray:
    return np.log(3.0 + 1.0 / t)


def psi_eval(psi: PsiFunction, t: ArrayLike) -> ArrayLike:
    """Evaluate psi at t >= 0; psi(0) = 0."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ConfigurationError("index functions are defined for t >= 0")
    safe = np.where(arr > 0, arr, 1.0)
    out = np.where(arr > 0, psi.constant * _log_term(safe) ** (-psi.exponent), 0.0)
    return float(out) if out.ndim == 0 else out


def psi_derivative(psi: PsiFunction, t: ArrayLike) -> ArrayLike:
    """psi'(t) = C e (ln(3 + 1/t))^(-e-1) / (3t^2 + t) for t > 0."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0):
        raise ConfigurationError("psi' is evaluated for t > 0 only")
    e = psi.exponent
    out = psi.constant * e * _log_term(arr) ** (-e - 1.0) / (3.0 * arr ** 2 + arr)
    return float(out) if out.ndim == 0 else out


def alpha_rule(psi: PsiFunction, delta: float) -> float:
    """
    Regularization parameter with 1/(2 alpha) = psi'(4 delta^2).

    psi is differentiable for t > 0, so the superdifferential condition reduces
    to this equation.
    """
    if not delta > 0:
        raise ConfigurationError(f"noise level must be positive, got {delta}")
    return 1.0 / (2.0 * psi_derivative(psi, 4.0 * delta ** 2))


def rate_bound(psi: PsiFunction, delta: float, beta: float = 0.5) -> float:
    """Error bound sqrt(8 psi(delta^2) / beta); for beta = 1/2 this is 4 sqrt(C)(ln(3 + delta^-2))^(-e/2)."""
    if not 0 < beta <= 1:
        raise ConfigurationError(f"beta must lie in (0, 1], got {beta}")
    return math.sqrt(8.0 * psi_eval(psi, delta ** 2) / beta)


def stability_bound(psi: PsiFunction, distance: float) -> float:
    """2 sqrt(psi(d^2)), the stability modulus implied by the source condition."""
    return 2.0 * math.sqrt(psi_eval(psi, distance ** 2))


def rate_abscissa(psi: PsiFunction, delta: ArrayLike) -> ArrayLike:
    """(ln(3 + delta^-2))^(-e/2), the abscissa of the rate plot."""
    d = np.asarray(delta, dtype=float)
    out = np.log(3.0 + d ** -2.0) ** (-psi.exponent / 2.0)
    return float(out) if out.ndim == 0 else out
