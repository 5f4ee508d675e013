"""Variational source condition cases, calibration of the index-function constant and stability checks."""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel

from ..core.errors import CalibrationError, ConfigurationError
from ..forward.operators import ForwardOperator
from ..forward.scatter_data import ScatterData, data_norm
from ..forward.volume import SolverConfig
from ..regularization.experiments import build_operator
from ..regularization.psi import PsiFunction, psi_eval, stability_bound
from ..spectral.lattice import ContrastField, project_to_D, sobolev_inner, sobolev_norm
from ..spectral.phantoms import bump_profile, plane_mode_samples, random_band_limited, smooth_bump
from ..spectral.sums import SobolevParams
from ..utils.hashing import field_hash


logger = structlog.get_logger(__name__)

COARSE = "coarse"
FINE = "fine"


@dataclass(frozen=True, eq=False)
class VscCase:
    """
    One evaluation of the source condition for the pair (f_dagger, f).

    Both the penalty-difference form
        beta/2 ||f_dagger - f||^2 <= 1/2 ||f||^2 - 1/2 ||f_dagger||^2 + psi(d)
    and the inner-product form
        Re <f_dagger, f_dagger - f> <= (1 - beta)/2 ||f_dagger - f||^2 + psi(d)
    are derived from the stored fields; lhs and rhs refer to the second one.
    """

    f_dagger: ContrastField = field(repr=False)
    f: ContrastField = field(repr=False)
    beta: float
    m: float
    data_dist_sq: float
    psi: PsiFunction
    C_s: float = 1.0
    case_id: str = ""

    @property
    def diff_norm_sq(self) -> float:
        return sobolev_norm(self.f_dagger - self.f, self.m) ** 2

    @property
    def inner(self) -> float:
        return sobolev_inner(self.f_dagger, self.f_dagger - self.f, self.m).real

    @property
    def psi_unit_value(self) -> float:
        return psi_eval(self.psi.unit(), self.data_dist_sq)

    @property
    def psi_value(self) -> float:
        return psi_eval(self.psi, self.data_dist_sq)

    @property
    def lhs(self) -> float:
        return self.inner

    @property
    def rhs(self) -> float:
        return 0.5 * (1.0 - self.beta) * self.diff_norm_sq + self.psi_value

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def lhs_penalty_form(self) -> float:
        return 0.5 * self.beta * self.diff_norm_sq

    @property
    def rhs_penalty_form(self) -> float:
        half_f = 0.5 * sobolev_norm(self.f, self.m) ** 2
        half_dagger = 0.5 * sobolev_norm(self.f_dagger, self.m) ** 2
        return half_f - half_dagger + self.psi_value

    @property
    def identity_defect(self) -> float:
        """Difference of the two slacks; zero up to rounding."""
        return abs((self.rhs_penalty_form - self.lhs_penalty_form) - (self.rhs - self.lhs))

    @property
    def required_constant(self) -> float:
        """Smallest psi constant making this case hold, 0 when no psi term is needed."""
        needed = self.inner - 0.5 * (1.0 - self.beta) * self.diff_norm_sq
        if needed <= 0:
            return 0.0
        unit = self.psi_unit_value
        return needed / unit if unit > 0 else math.inf

    @property
    def branch(self) -> str:
        """coarse when ||f_dagger - f|| > 4 C_s and ||f_dagger|| <= C_s, where Cauchy-Schwarz settles the case."""
        far = math.sqrt(self.diff_norm_sq) > 4.0 * self.C_s
        bounded = sobolev_norm(self.f_dagger, self.m) <= self.C_s
        return COARSE if far and bounded else FINE

    def with_constant(self, constant: float) -> "VscCase":
        return VscCase(
            f_dagger=self.f_dagger,
            f=self.f,
            beta=self.beta,
            m=self.m,
            data_dist_sq=self.data_dist_sq,
            psi=self.psi.with_constant(constant),
            C_s=self.C_s,
            case_id=self.case_id,
        )

    def summary(self) -> Dict:
        return {
            "case_id": self.case_id,
            "f_dagger": field_hash(self.f_dagger),
            "f": field_hash(self.f),
            "beta": self.beta,
            "m": self.m,
            "data_dist_sq": self.data_dist_sq,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.rhs - self.lhs,
            "holds": self.holds,
            "branch": self.branch,
            "identity_defect": self.identity_defect,
        }


class CalibrationReport(BaseModel):
    psi: PsiFunction
    constant_name: str
    fitted_value: float
    beta: float
    n_cases: int
    n_active: int
    worst_case: Optional[str] = None
    branches: Dict[str, int]
    scope: str = "sampled perturbation family"


class ValidationReport(BaseModel):
    constant: float
    factor: float
    n_cases: int
    n_failed: int
    pass_rate: float
    failures: List[str]


class StabilityReport(BaseModel):
    lhs: float
    rhs: float
    data_distance: float
    holds: bool


def _check_beta(beta: float) -> None:
    if not 0 < beta <= 1:
        raise ConfigurationError(f"beta must lie in (0, 1], got {beta}")


def vsc_check(
    f_dagger: ContrastField,
    f: ContrastField,
    psi: PsiFunction,
    beta: float = 0.5,
    kind: str = "near",
    cfg: Optional[SolverConfig] = None,
    operator: Optional[ForwardOperator] = None,
    params: SobolevParams = SobolevParams(),
    data_dagger: Optional[ScatterData] = None,
    n_points: int = 12,
    case_id: str = "",
) -> VscCase:
    """
    Evaluate the source condition for one pair.

    Args:
        f_dagger: Exact contrast
        f: Competitor contrast
        psi: Index function with its constant
        beta: Coefficient of the left-hand side, in (0, 1]
        kind: near or far, selecting the forward operator when none is given
        cfg: Solver configuration used to build the operator
        operator: Forward operator shared across cases
        params: Sobolev indices; m selects the norm and C_s the branch rule
        data_dagger: Precomputed data of f_dagger

    Returns:
        The case record
    """
    _check_beta(beta)
    if operator is None:
        if cfg is None:
            raise ConfigurationError("vsc_check needs a forward operator or a solver configuration")
        operator = build_operator(kind, cfg, n_points)
    data_dagger = operator.evaluate(f_dagger) if data_dagger is None else data_dagger
    distance = data_norm(operator.evaluate(f) - data_dagger)
    case = VscCase(
        f_dagger=f_dagger,
        f=f,
        beta=beta,
        m=params.m,
        data_dist_sq=distance ** 2,
        psi=psi,
        C_s=params.C_s,
        case_id=case_id,
    )
    scale = abs(case.lhs) + abs(case.rhs)
    if case.identity_defect > 1e-12 * max(scale, 1.0):
        logger.warning(f"source condition forms disagree by {case.identity_defect:.3e} on case {case_id}")
    return case


def evaluate_cases(
    f_dagger: ContrastField,
    perturbations: Sequence[Tuple[str, ContrastField]],
    psi: PsiFunction,
    beta: float,
    operator: ForwardOperator,
    params: SobolevParams = SobolevParams(),
    map_fn: Callable = map,
) -> List[VscCase]:
    """Source condition records for a perturbation family; map_fn may run them concurrently."""
    data_dagger = operator.evaluate(f_dagger)

    def run(item):
        case_id, f = item
        return vsc_check(
            f_dagger, f, psi, beta, operator=operator, params=params, data_dagger=data_dagger, case_id=case_id
        )

    return list(map_fn(run, list(perturbations)))


def calibrate_from_cases(cases: Sequence[VscCase], psi_shape: PsiFunction, beta: float = 0.5) -> CalibrationReport:
    """
    Smallest psi constant for which every case holds.

    Raises:
        CalibrationError: If no case needs the psi term
    """
    _check_beta(beta)
    best, worst, active = 0.0, None, 0
    branches = {COARSE: 0, FINE: 0}
    for case in cases:
        branches[case.branch] += 1
        required = case.required_constant
        if required > 0:
            active += 1
            if required > best:
                best, worst = required, case.case_id
    if active == 0:
        raise CalibrationError("no case activates the psi term; the calibration set is degenerate")
    if not math.isfinite(best):
        raise CalibrationError(f"case {worst} has distinct contrasts with identical data")
    name = "A" if psi_shape.variant == "near" else "B"
    logger.info(f"calibrated {name}={best:.4g} over {len(cases)} cases ({active} active, worst {worst})")
    return CalibrationReport(
        psi=psi_shape.with_constant(best),
        constant_name=name,
        fitted_value=best,
        beta=beta,
        n_cases=len(cases),
        n_active=active,
        worst_case=worst,
        branches=branches,
    )


def calibrate_constant(
    f_dagger: ContrastField,
    perturbations: Sequence[Tuple[str, ContrastField]],
    psi_shape: PsiFunction,
    beta: float = 0.5,
    kind: str = "near",
    cfg: Optional[SolverConfig] = None,
    operator: Optional[ForwardOperator] = None,
    params: SobolevParams = SobolevParams(),
    n_points: int = 12,
    map_fn: Callable = map,
) -> Tuple[CalibrationReport, List[VscCase]]:
    """
    Fit the constant A (near) or B (far) of the index function on a perturbation family.

    Returns:
        The report and the evaluated cases
    """
    if operator is None:
        if cfg is None:
            raise ConfigurationError("calibration needs a forward operator or a solver configuration")
        operator = build_operator(kind, cfg, n_points)
    cases = evaluate_cases(f_dagger, perturbations, psi_shape, beta, operator, params, map_fn)
    return calibrate_from_cases(cases, psi_shape, beta), cases


def validate_constant(report: CalibrationReport, cases: Sequence[VscCase], factor: float = 1.05) -> ValidationReport:
    """Check held-out cases with the constant factor * fitted_value."""
    constant = factor * report.fitted_value
    failures = [case.case_id for case in cases if not case.with_constant(constant).holds]
    n = len(cases)
    return ValidationReport(
        constant=constant,
        factor=factor,
        n_cases=n,
        n_failed=len(failures),
        pass_rate=1.0 - len(failures) / n if n else 1.0,
        failures=failures,
    )


def stability_check(
    f1: ContrastField,
    f2: ContrastField,
    psi: PsiFunction,
    kind: str = "near",
    cfg: Optional[SolverConfig] = None,
    operator: Optional[ForwardOperator] = None,
    m: float = 2.0,
    n_points: int = 12,
) -> StabilityReport:
    """||f1 - f2||_{H^m} against 2 sqrt(psi(||F(f1) - F(f2)||^2))."""
    if operator is None:
        if cfg is None:
            raise ConfigurationError("stability_check needs a forward operator or a solver configuration")
        operator = build_operator(kind, cfg, n_points)
    distance = data_norm(operator.evaluate(f1) - operator.evaluate(f2))
    lhs = sobolev_norm(f1 - f2, m)
    rhs = stability_bound(psi, distance)
    return StabilityReport(lhs=lhs, rhs=rhs, data_distance=distance, holds=bool(lhs <= rhs))


def _envelope(f_dagger: ContrastField, radius: float) -> np.ndarray:
    x1, x2, x3 = f_dagger.lattice.grid_points()
    return bump_profile(np.sqrt(x1 ** 2 + x2 ** 2 + x3 ** 2), radius)


def perturbation_family(
    f_dagger: ContrastField,
    amplitudes: Sequence[float],
    seed: int = 0,
    modes: Sequence = ((1, 0, 0), (0, 1, 1), (2, 1, 0)),
    n_random: int = 2,
    radius: float = 0.8 * math.pi,
    prefix: str = "p",
) -> List[Tuple[str, ContrastField]]:
    """
    Admissible competitors f = P(f_dagger + a h) for a set of shapes h and amplitudes a.

    Shapes are enveloped single modes cos(gamma.x), enveloped random band-limited
    textures and off-center bumps, each normalized to unit grid maximum and
    entering with a negative sign so the real part stays below 1. The result is
    projected onto the admissible set with the hard ball mask.
    """
    lattice = f_dagger.lattice
    envelope = _envelope(f_dagger, radius)
    shapes = []
    for gamma in modes:
        if max(abs(int(g)) for g in gamma) > lattice.max_degree:
            continue
        shapes.append((f"mode{tuple(int(g) for g in gamma)}", plane_mode_samples(lattice, gamma).real * envelope))
    for i in range(n_random):
        texture = random_band_limited(lattice, seed + i, real=True).samples.real
        shapes.append((f"random{seed + i}", texture * envelope))
    shapes.append(("bump", smooth_bump(lattice, 1.0, 0.4 * math.pi, (0.3 * math.pi, 0.0, 0.0)).samples.real))
    shapes.append(("absorbing", 1j * envelope))

    family = []
    for name, samples in shapes:
        peak = float(np.max(np.abs(samples))) or 1.0
        shape = ContrastField.from_samples(samples / peak, lattice)
        for a in amplitudes:
            f = project_to_D(f_dagger - shape.scaled(a), plateau_radius=f_dagger.support_radius)
            family.append((f"{prefix}:{name}:{a:g}", f))
    return family
