"""Lattice sums, Sobolev embedding constants and the high/low frequency splitting audits."""

import math
from typing import List

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import integrate

from ..core.errors import LatticeError
from .lattice import ContrastField, Lattice, sobolev_norm


logger = structlog.get_logger(__name__)

# Lattice truncation used for the enumerated part of the embedding sum
EMBEDDING_ENUMERATION_DEGREE = 16


class SobolevParams(BaseModel):
    """Smoothness indices 3/2 < m < s with s != 2m + 3/2 and the bound C_s on ||f||_{H^s}."""

    model_config = ConfigDict(frozen=True)

    m: float = 2.0
    s: float = 4.0
    C_s: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_order(self) -> "SobolevParams":
        if not self.m > 1.5:
            raise ValueError(f"smoothness index m={self.m} must satisfy m > 3/2")
        if not self.s > self.m:
            raise ValueError(f"smoothness index s={self.s} must satisfy s > m={self.m}")
        if abs(self.s - (2.0 * self.m + 1.5)) < 1e-12:
            raise ValueError(
                f"s={self.s} equals 2m+3/2; this borderline case carries an extra "
                "logarithmic factor and is not supported"
            )
        return self

    @property
    def mu(self) -> float:
        return min(1.0, (self.s - self.m) / (self.m + 1.5))


class LatticeSumReport(BaseModel):
    """Outcome of the lattice-sum growth audit for one exponent."""

    lam: float
    tau: float
    rhos: List[float]
    ratios: List[float]
    c4_fit: float
    max_ratio: float
    top_decade_slope: float
    below_majorant: bool
    bounded: bool


class SplitCheckReport(BaseModel):
    """Both sides of the high-frequency splitting inequality."""

    lhs: float
    rhs: float
    rho: float
    holds: bool


def embedding_constant(m: float, lattice: Lattice = None) -> float:
    """
    Certified upper bound M_em with ||f||_inf <= M_em ||f||_{H^m}.

    M_em = (2 pi)^(-3/2) (sum_{gamma in Z^3} (1+|gamma|^2)^(-m))^(1/2). The sum is
    enumerated for |gamma|_inf <= K and the remainder is bounded by comparing each
    lattice term with the integral over its unit cube.

    Args:
        m: Smoothness index, must exceed 3/2
        lattice: Optional lattice; K is at least its max_degree

    Returns:
        The certified constant
    """
    if not m > 1.5:
        raise LatticeError(f"embedding constant requires m > 3/2 (sum diverges), got m={m}")
    K = EMBEDDING_ENUMERATION_DEGREE
    if lattice is not None:
        K = max(K, lattice.max_degree)
    head = float(np.sum(Lattice(max_degree=K).sobolev_weights(-m)))
    tail = embedding_tail_bound(m, K)
    return (2.0 * math.pi) ** -1.5 * math.sqrt(head + tail)


def embedding_tail_bound(m: float, K: int) -> float:
    """Upper bound for sum over |gamma|_inf > K of (1+|gamma|^2)^(-m)."""
    # |gamma| >= |x| - sqrt(3)/2 on the unit cube around gamma; those cubes lie in |x| >= K + 1/2
    shift = math.sqrt(3.0) / 2.0
    lower = K + 0.5 - shift

    def integrand(s: float) -> float:
        return (s + shift) ** 2 * (1.0 + s * s) ** (-m)

    value, error = integrate.quad(integrand, lower, np.inf, limit=200)
    return 4.0 * math.pi * (value + abs(error))


def _enumerate(rho: float) -> np.ndarray:
    K = int(math.floor(rho))
    k = np.arange(-K, K + 1)
    n2 = k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2
    return n2[n2 <= rho * rho + 1e-9]


def lattice_sum(lam: float, rho: float) -> float:
    """Exact enumeration of sum over gamma in Z^3 with |gamma| <= rho of (1+|gamma|^2)^lam."""
    if rho < 0:
        return 0.0
    n2 = _enumerate(rho).astype(float)
    return float(np.sum((1.0 + n2) ** lam))


def lattice_sum_shells(lam: float, rho: float) -> float:
    """The same lattice sum computed by counting lattice points on each sphere |gamma|^2 = n."""
    if rho < 0:
        return 0.0
    n_max = int(math.floor(rho * rho + 1e-9))
    K = int(math.isqrt(n_max))
    squares = np.zeros(n_max + 1, dtype=np.int64)
    squares[0] = 1
    squares[np.arange(1, K + 1) ** 2] = 2
    counts = np.convolve(np.convolve(squares, squares)[: n_max + 1], squares)[: n_max + 1]
    n = np.nonzero(counts)[0]
    return float(np.sum(counts[n] * (1.0 + n.astype(float)) ** lam))


def lattice_sum_majorant(lam: float, rho: float) -> float:
    """Explicit volume-comparison majorant of lattice_sum(lam, rho) for rho >= 1."""
    if lam == -1.5:
        raise LatticeError("lambda = -3/2 is excluded: the lattice sum grows logarithmically there")
    if lam >= 0:
        return 4.0 * math.pi / 3.0 * (rho + math.sqrt(3.0)) ** 3 * (1.0 + rho * rho) ** lam
    if lam > -1.5:
        return 1.0 + 192.0 / (3.0 + 2.0 * lam) * rho ** (3.0 + 2.0 * lam)
    return 1.0 + 192.0 / ((-2.0 * lam - 3.0) * 2.0 ** (3.0 + 2.0 * lam))


def lattice_sum_bound_check(
    lam: float, rho_list, slope_tolerance: float = 0.2
) -> LatticeSumReport:
    """
    Audit sqrt(lattice_sum(lam, rho)) <= c4 rho^tau with tau = max(lam + 3/2, 0).

    The ratio sequence is bounded when its log-log slope over the largest decade
    of rho stays below slope_tolerance and every sum respects its explicit majorant.
    """
    if lam == -1.5:
        raise LatticeError(
            "lambda = -3/2 is excluded from the lattice-sum bound: "
            "the sum grows logarithmically in rho there"
        )
    rhos = sorted(float(r) for r in rho_list)
    if not rhos or rhos[0] < 1.0:
        raise LatticeError("lattice_sum_bound_check requires every rho >= 1")
    tau = max(lam + 1.5, 0.0)
    sums = [lattice_sum(lam, r) for r in rhos]
    ratios = [math.sqrt(v) / r ** tau for v, r in zip(sums, rhos)]
    below = all(v <= lattice_sum_majorant(lam, r) for v, r in zip(sums, rhos))

    top = [i for i, r in enumerate(rhos) if r >= rhos[-1] / 10.0]
    if len(top) >= 2 and rhos[top[-1]] > rhos[top[0]]:
        slope = float(
            np.polyfit(np.log([rhos[i] for i in top]), np.log([ratios[i] for i in top]), 1)[0]
        )
    else:
        slope = 0.0
    max_ratio = max(ratios)
    report = LatticeSumReport(
        lam=lam,
        tau=tau,
        rhos=rhos,
        ratios=ratios,
        c4_fit=max_ratio,
        max_ratio=max_ratio,
        top_decade_slope=slope,
        below_majorant=below,
        bounded=bool(slope <= slope_tolerance and below),
    )
    logger.info(f"lattice sum audit lambda={lam}: c4={max_ratio:.4f}, slope={slope:.4f}")
    return report


def high_freq_split_check(f_dagger: ContrastField, f: ContrastField, params, rho: float) -> SplitCheckReport:
    """
    Evaluate the high-frequency bound on the truncated lattice.

    Re sum_{|gamma| > rho} (1+|gamma|^2)^m f^dag conj(f^dag - f)
        <= 1/8 ||f^dag - f||_{H^m}^2 + 2 ||f^dag||_{H^s}^2 rho^(2(m-s))
    """
    if rho <= 0:
        raise LatticeError(f"rho must be positive, got {rho}")
    m, s = params.m, params.s
    lattice = f_dagger.lattice
    outside = lattice.gamma_norm_sq() > rho * rho
    diff = f_dagger - f
    weighted = lattice.sobolev_weights(m) * f_dagger.coeffs * np.conj(diff.coeffs)
    lhs = float(np.real(np.sum(weighted[outside])))
    rhs = sobolev_norm(diff, m) ** 2 / 8.0 + 2.0 * sobolev_norm(f_dagger, s) ** 2 * rho ** (2.0 * (m - s))
    return SplitCheckReport(lhs=lhs, rhs=rhs, rho=rho, holds=bool(lhs <= rhs * (1.0 + 1e-12) + 1e-300))
