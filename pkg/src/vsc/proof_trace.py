"""Parameter schedule of the source-condition argument and the resulting theorem constant."""

import math
from typing import Optional

from pydantic import BaseModel

from ..core.errors import ConfigurationError
from ..spectral.sums import SobolevParams


class ProofTrace(BaseModel):
    delta: float
    log_term: float
    t: float
    rho: float
    epsilon: float
    tau: float
    exponent: float
    t_bar: float
    t_threshold: float
    delta_max: float
    admissible: bool
    regime: str


def _t_bar(R: float, exponent: float) -> float:
    # 2t >= (12 R t)^(1/p) for every t >= t_bar when p > 1
    if exponent <= 1.0:
        return 0.0
    return (12.0 * R / 2.0 ** exponent) ** (1.0 / (exponent - 1.0))


def proof_parameter_trace(
    delta: float,
    params: SobolevParams,
    R: float,
    kappa: float = 1.0,
    t0: Optional[float] = None,
) -> ProofTrace:
    """
    Schedule 12 R t = ln(3 + delta^-2) = rho^(tau + s - m), epsilon = (12R)^2.

    tau = max(2m + 3/2 - s, 0). The schedule is admissible when
    2 sqrt(kappa^2 + t^2) > 2t >= rho >= 1 and t >= t0. delta_max is the noise
    level where t reaches max(t_bar, t0); above it the coarse bound applies.
    """
    if not delta > 0:
        raise ConfigurationError(f"noise level must be positive, got {delta}")
    m, s = params.m, params.s
    tau = max(2.0 * m + 1.5 - s, 0.0)
    exponent = tau + s - m
    log_term = math.log(3.0 + delta ** -2)
    t = log_term / (12.0 * R)
    rho = log_term ** (1.0 / exponent)
    threshold = max(_t_bar(R, exponent), t0 or 0.0)
    admissible = bool(2.0 * math.sqrt(kappa ** 2 + t ** 2) > 2.0 * t >= rho and rho >= 1.0 and t >= (t0 or 0.0))
    growth = 12.0 * R * threshold
    if growth >= 700:
        delta_max = 0.0
    elif math.exp(growth) > 3.0:
        delta_max = (math.exp(growth) - 3.0) ** -0.5
    else:
        # ln(3 + delta^-2) > ln 3 >= growth for every delta
        delta_max = math.inf
    return ProofTrace(
        delta=delta,
        log_term=log_term,
        t=t,
        rho=rho,
        epsilon=(12.0 * R) ** 2,
        tau=tau,
        exponent=exponent,
        t_bar=_t_bar(R, exponent),
        t_threshold=threshold,
        delta_max=delta_max,
        admissible=admissible,
        regime="fine" if delta <= delta_max else "coarse",
    )


def theorem_constant(A_tilde: float, C_s: float, delta_max: float, mu: float) -> float:
    """A = max(A_tilde, C_s^2 (ln(3 + delta_max^-2))^(2 mu)), covering the coarse regime."""
    if not delta_max > 0:
        raise ConfigurationError(f"delta_max must be positive, got {delta_max}")
    return max(A_tilde, C_s ** 2 * math.log(3.0 + delta_max ** -2) ** (2.0 * mu))
