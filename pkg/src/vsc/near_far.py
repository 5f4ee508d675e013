"""Empirical check of the estimate of near-field distances by far-field distances."""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel

from ..core.errors import AdmissibilityError, CalibrationError, ConfigurationError
from ..forward.operators import FarFieldOperator, ForwardOperator, NearFieldOperator
from ..forward.scatter_data import data_norm
from ..forward.volume import SolverConfig
from ..regularization.psi import PsiFunction, psi_eval
from ..spectral.lattice import ContrastField


logger = structlog.get_logger(__name__)

FIT_LABEL = "empirical fit of the inequality shape, constants not derived"


class NearFarFit(BaseModel):
    omega: float
    rho: float
    theta: float
    n_cases: int
    label: str = FIT_LABEL


class NearFarReport(BaseModel):
    case_id: str = ""
    near_norm_sq: float
    far_norm: float
    bound_with_fitted_constants: Optional[float] = None
    slack: Optional[float] = None
    holds: Optional[bool] = None


class NearFarValidation(BaseModel):
    n_cases: int
    n_failed: int
    pass_rate: float
    failures: List[str]


def near_to_far_bound(d: float, omega: float, rho: float, theta: float) -> float:
    """
    rho^2 exp(-(-ln(d / (omega rho)))^theta).

    Far-field distances at or above omega rho give the trivial value rho^2.
    """
    if not 0 < theta < 1:
        raise ConfigurationError(f"theta must lie in (0, 1), got {theta}")
    if d <= 0:
        return 0.0
    x = max(-math.log(d / (omega * rho)), 0.0)
    return rho ** 2 * math.exp(-(x ** theta))


def _omega_limit(cases: Sequence[Tuple[float, float]], rho: float, theta: float) -> float:
    # largest omega with n <= near_to_far_bound(d, omega, rho, theta) on every case
    log_omega = math.inf
    for near_sq, far in cases:
        if near_sq <= 0:
            continue
        if near_sq > rho ** 2:
            return 0.0
        log_omega = min(log_omega, math.log(rho ** 2 / near_sq) ** (1.0 / theta) + math.log(far) - math.log(rho))
    return math.exp(log_omega) if math.isfinite(log_omega) else math.inf


def fit_near_to_far(
    reports: Sequence[NearFarReport], theta: float, rho_factors: Sequence[float] = tuple(np.geomspace(1.0, 100.0, 41))
) -> NearFarFit:
    """
    Fit (omega, rho) so the inequality holds on every case with the least mean log slack.

    rho runs over sqrt(max near_norm_sq) times rho_factors; for each rho the
    largest feasible omega is taken.

    Raises:
        CalibrationError: If a case has distinct near fields but equal far fields
    """
    cases = [(r.near_norm_sq, r.far_norm) for r in reports]
    active = [(n, d) for n, d in cases if n > 0]
    if not active:
        raise CalibrationError("no case with a nonzero near-field distance")
    if any(d <= 0 for _, d in active):
        raise CalibrationError("a case has a nonzero near-field distance and a zero far-field distance")
    base = math.sqrt(max(n for n, _ in active))
    best = None
    for factor in rho_factors:
        rho = base * float(factor) * (1.0 + 1e-12)
        omega = _omega_limit(active, rho, theta)
        if not (omega > 0 and math.isfinite(omega)):
            continue
        omega *= 1.0 - 1e-9
        slack = float(np.mean([math.log(near_to_far_bound(d, omega, rho, theta) / n) for n, d in active]))
        if best is None or slack < best[0]:
            best = (slack, omega, rho)
    if best is None:
        raise CalibrationError("no feasible (omega, rho) on the search grid")
    _, omega, rho = best
    logger.info(f"near-to-far fit: omega={omega:.4g}, rho={rho:.4g} over {len(active)} cases")
    return NearFarFit(omega=omega, rho=rho, theta=theta, n_cases=len(active))


def near_to_far_check(
    f1: ContrastField,
    f2: ContrastField,
    theta: float,
    cfg: SolverConfig,
    threshold: float,
    near_operator: Optional[ForwardOperator] = None,
    far_operator: Optional[ForwardOperator] = None,
    fit: Optional[NearFarFit] = None,
    n_points: int = 12,
    case_id: str = "",
) -> NearFarReport:
    """
    Near-field distance on the sphere of radius 2R and far-field distance of one pair.

    Raises:
        AdmissibilityError: If the far-field distance exceeds the small-data threshold
    """
    near_operator = near_operator or NearFieldOperator.create(cfg, n_points, radius=2.0 * cfg.radius_R)
    far_operator = far_operator or FarFieldOperator.create(cfg, n_points)
    far = data_norm(far_operator.evaluate(f1) - far_operator.evaluate(f2))
    if far > threshold:
        raise AdmissibilityError(f"far-field distance {far:.4g} exceeds the small-data threshold {threshold:.4g}")
    near_sq = data_norm(near_operator.evaluate(f1) - near_operator.evaluate(f2)) ** 2
    report = NearFarReport(case_id=case_id, near_norm_sq=near_sq, far_norm=far)
    return apply_fit(report, fit) if fit is not None else report


def apply_fit(report: NearFarReport, fit: NearFarFit) -> NearFarReport:
    bound = near_to_far_bound(report.far_norm, fit.omega, fit.rho, fit.theta)
    return report.model_copy(
        update={
            "bound_with_fitted_constants": bound,
            "slack": bound - report.near_norm_sq,
            "holds": bool(report.near_norm_sq <= bound),
        }
    )


def validate_near_to_far(reports: Sequence[NearFarReport], fit: NearFarFit) -> NearFarValidation:
    checked = [apply_fit(r, fit) for r in reports]
    failures = [r.case_id for r in checked if not r.holds]
    n = len(checked)
    return NearFarValidation(
        n_cases=n, n_failed=len(failures), pass_rate=1.0 - len(failures) / n if n else 1.0, failures=failures
    )


def psi_composition_far(
    psi_near: PsiFunction,
    theta: float,
    fitted: NearFarFit,
    threshold: float,
    decades: float = 6.0,
    n_grid: int = 241,
) -> PsiFunction:
    """
    Far-field index function B (ln(3 + 1/t))^(-2 mu theta) majorizing psi_near(phi(t)).

    phi(t) = rho^2 exp(-(-ln sqrt(t) + ln(omega rho))^theta) is the near-to-far bound
    for the squared far-field distance t; B is the maximum ratio on a log grid of t
    spanning `decades` decades below threshold^2.

    Raises:
        CalibrationError: If the ratio is not finite on the grid
    """
    if psi_near.variant != "near":
        raise ConfigurationError("the composition starts from a near-field index function")
    ts = np.geomspace(threshold ** 2 * 10.0 ** (-decades), threshold ** 2, n_grid)
    shape = PsiFunction.far(1.0, psi_near.mu, theta)
    ratios = []
    for t in ts:
        phi = near_to_far_bound(math.sqrt(t), fitted.omega, fitted.rho, theta)
        ratios.append(psi_eval(psi_near, phi) / psi_eval(shape, t))
    B = float(np.max(ratios))
    if not (math.isfinite(B) and B > 0):
        raise CalibrationError(f"composed index function is not majorized on the grid (B={B})")
    return shape.with_constant(B * (1.0 + 1e-9))
