"""Empirical audits of the GOS norm bounds, the integral identity bound and the low-frequency estimate."""

import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel

from ..core.errors import AdmissibilityError, CalibrationError, ConvergenceError
from ..core.interfaces import CalibrationSummary
from ..forward.scatter_data import ScatterData, data_norm
from ..forward.volume import SolverConfig
from ..spectral.lattice import ContrastField, sobolev_norm
from .faddeev import GOS_RESIDUAL_TOLERANCE, GosSolution, solve_gos
from .frequencies import admissible_t, pair_sum, zeta_eta


logger = structlog.get_logger(__name__)

# Largest exponent evaluated before a term is reported as infinite
_EXP_LIMIT = 700.0


class GosBoundRow(BaseModel):
    t: float
    v_l2: float
    bound_ratio: float
    u_scaled: float
    residual: float


class GosBoundReport(BaseModel):
    """Per-t norms of a GOS sweep and the fitted constant."""

    c2_fit: float
    max_bound_ratio: float
    slope: float
    bounded: bool
    t_admissible_min: float
    v_bound_from_ratio: float
    bound_from_ratio_holds: bool
    per_t: List[GosBoundRow]


class IdentityBoundReport(BaseModel):
    lhs: float
    rhs_over_c1: float
    log_rhs_over_c1: float
    c1_fit: float


class LowFreqReport(BaseModel):
    lhs: float
    bound: float
    data_term: float
    smooth_term: float
    required_c3: float
    holds: bool


class C3Validation(BaseModel):
    c3: float
    n_checked: int
    n_failed: int
    pass_rate: float
    failures: List[str]


def _log_slope(ts: Sequence[float], values: Sequence[float]) -> float:
    pairs = [(t, v) for t, v in zip(ts, values) if t > 0 and v > 0]
    if len(pairs) < 2:
        return 0.0
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    if np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def verify_gos_bounds(
    f: ContrastField,
    t_list: Iterable[float],
    cfg: SolverConfig,
    gamma=(0, 0, 0),
    slope_tolerance: float = 0.05,
) -> GosBoundReport:
    """
    Solve GOS along a t sweep and fit the constant of the three norm bounds.

    For each t the report records t ||v|| / ||f||_inf, ||v|| and ||u|| exp(-R' t),
    all over B_R'. c2_fit is the largest of them; the ratio sequence is bounded
    when its log-log slope over the upper half of the sweep stays below
    slope_tolerance.

    Raises:
        AdmissibilityError: If some t is below the admissibility bound
    """
    ts = sorted(float(t) for t in t_list)
    if not ts:
        raise AdmissibilityError("empty t sweep")
    R_prime = 2.0 * cfg.radius_R
    sup = f.sup_norm()
    t_min = admissible_t(sup, cfg.kappa, R_prime)
    if ts[0] < t_min * (1.0 - 1e-12):
        raise AdmissibilityError(f"t={ts[0]:.4g} is below the admissibility bound {t_min:.4g}")

    rows = []
    for t in ts:
        zeta, _ = zeta_eta(gamma, t, cfg.kappa)
        sol = solve_gos(f, zeta, cfg)
        v = sol.norms["v_l2"]
        rows.append(
            GosBoundRow(
                t=t,
                v_l2=v,
                bound_ratio=t * v / sup if sup > 0 else 0.0,
                u_scaled=sol.norms["u_l2_scaled"],
                residual=sol.residual,
            )
        )

    ratios = [r.bound_ratio for r in rows]
    upper = len(ts) // 2
    slope = _log_slope(ts[upper:], ratios[upper:])
    max_ratio = max(ratios)
    c2 = max(max_ratio, max(r.v_l2 for r in rows), max(r.u_scaled for r in rows))
    # ||v|| <= max_ratio ||f||_inf / t <= max_ratio ||f||_inf / t_min for every t >= t_min
    v_bound = max_ratio * sup / t_min if t_min > 0 else 0.0
    holds = sup == 0 or max(r.v_l2 for r in rows) <= v_bound * (1.0 + 1e-12)
    logger.info(f"GOS sweep over {len(ts)} values of t: c2={c2:.4g}, slope={slope:.4f}")
    return GosBoundReport(
        c2_fit=c2,
        max_bound_ratio=max_ratio,
        slope=slope,
        bounded=bool(slope <= slope_tolerance),
        t_admissible_min=t_min,
        v_bound_from_ratio=v_bound,
        bound_from_ratio_holds=bool(holds),
        per_t=rows,
    )


def _check_solution(u: GosSolution, tolerance: float) -> None:
    if u.residual > tolerance:
        raise ConvergenceError("GOS solution residual above tolerance", u.residual, u.iterations, u.symbol_min)


def identity_bound_check(
    f1: ContrastField,
    f2: ContrastField,
    u1: GosSolution,
    u2: GosSolution,
    w1: ScatterData,
    w2: ScatterData,
    tolerance: float = GOS_RESIDUAL_TOLERANCE,
) -> IdentityBoundReport:
    """
    Compare |int_{B_pi} (f1 - f2) u1 u2| with ||w1 - w2|| ||u1|| ||u2||.

    u1 and u2 must live on the same rotated grid; for a pair from zeta_eta the
    exponential growth cancels in the product. ||u_j|| are L^2(B_R') norms and
    the right-hand side is carried in logarithmic form.
    """
    _check_solution(u1, tolerance)
    _check_solution(u2, tolerance)
    if u1.grid.size != u2.grid.size or not math.isclose(u1.grid.R_prime, u2.grid.R_prime) or not np.allclose(
        u1.freq.frame, u2.freq.frame
    ):
        raise AdmissibilityError("GOS solutions live on different grids")
    grid = u1.grid
    frame = u1.freq.frame
    inside = grid.radius() <= math.pi
    points = grid.points().reshape(grid.shape + (3,))[inside]
    diff = (f1 - f2).evaluate(points @ frame.T)
    k = frame.T @ pair_sum(u1.freq, u2.freq)
    phase = np.exp(1j * points @ k)
    integrand = diff * phase * (1.0 + u1.v[inside]) * (1.0 + u2.v[inside])
    lhs = float(abs(grid.spacing ** 3 * np.sum(integrand)))

    w_diff = data_norm(w1 - w2)
    log_rhs = (math.log(w_diff) if w_diff > 0 else -math.inf) + u1.norms["u_l2_log"] + u2.norms["u_l2_log"]
    rhs = math.exp(log_rhs) if log_rhs < _EXP_LIMIT else math.inf
    if lhs == 0.0:
        ratio = 0.0
    elif log_rhs == -math.inf:
        ratio = math.inf
    else:
        ratio = math.exp(math.log(lhs) - log_rhs)
    return IdentityBoundReport(lhs=lhs, rhs_over_c1=rhs, log_rhs_over_c1=log_rhs, c1_fit=ratio)


class C1Accumulator:
    """Running maximum of c1 ratios; merging is associative and order independent."""

    def __init__(self):
        self.c1 = 0.0
        self.n_cases = 0
        self.worst: Optional[str] = None

    def add(self, report: IdentityBoundReport, case_id: str = "") -> float:
        self.n_cases += 1
        if report.c1_fit > self.c1:
            self.c1 = report.c1_fit
            self.worst = case_id
        return self.c1

    def merge(self, other: "C1Accumulator") -> "C1Accumulator":
        merged = C1Accumulator()
        merged.n_cases = self.n_cases + other.n_cases
        best = max((self, other), key=lambda acc: acc.c1)
        merged.c1, merged.worst = best.c1, best.worst
        return merged


def low_freq_coeff_estimate(
    f1: ContrastField,
    f2: ContrastField,
    gamma,
    t: float,
    w_diff_norm: float,
    c3: float,
    m: float = 2.0,
    R: float = 1.2 * math.pi,
    kappa: float = 1.0,
    t0: float = 0.0,
) -> LowFreqReport:
    """
    Evaluate c3 exp(4R't)||w1 - w2|| + (c3/t)||f1 - f2||_{H^m} with R' = 2R against |f1^(gamma) - f2^(gamma)|.

    Raises:
        AdmissibilityError: If t < t0 or |gamma| > 2 sqrt(kappa^2 + t^2)
    """
    if t < t0 or t <= 0:
        raise AdmissibilityError(f"t={t} must satisfy t >= t0={t0} and t > 0")
    g = np.asarray(gamma, dtype=float)
    if float(np.linalg.norm(g)) > 2.0 * math.sqrt(kappa ** 2 + t ** 2):
        raise AdmissibilityError(f"|gamma|={np.linalg.norm(g):.4g} exceeds 2 sqrt(kappa^2 + t^2)")
    R_prime = 2.0 * R
    lhs = abs(f1.coefficient(gamma) - f2.coefficient(gamma))
    exponent = 4.0 * R_prime * t
    growth = math.exp(exponent) if exponent < _EXP_LIMIT else math.inf
    data_unit = growth * w_diff_norm if w_diff_norm > 0 else 0.0
    smooth_unit = sobolev_norm(f1 - f2, m) / t
    unit = data_unit + smooth_unit
    required = lhs / unit if unit > 0 else (0.0 if lhs == 0 else math.inf)
    bound = c3 * unit
    return LowFreqReport(
        lhs=lhs,
        bound=bound,
        data_term=c3 * data_unit,
        smooth_term=c3 * smooth_unit,
        required_c3=required,
        holds=bool(lhs <= bound * (1.0 + 1e-12)),
    )


def _admissible_grid(gammas, ts, kappa: float, t0: float) -> List[Tuple[tuple, float]]:
    out = []
    for t in ts:
        if t < t0:
            continue
        for gamma in gammas:
            if float(np.linalg.norm(gamma)) <= 2.0 * math.sqrt(kappa ** 2 + t ** 2):
                out.append((tuple(int(v) for v in gamma), float(t)))
    return out


def calibrate_c3(
    cases: Sequence[Tuple[ContrastField, ContrastField, float]],
    gammas: Sequence,
    ts: Sequence[float],
    m: float = 2.0,
    R: float = 1.2 * math.pi,
    kappa: float = 1.0,
    t0: float = 0.0,
) -> CalibrationSummary:
    """
    Smallest c3 making the low-frequency estimate hold on every case and admissible (gamma, t).

    Args:
        cases: Triples (f1, f2, ||w1 - w2||)

    Raises:
        CalibrationError: If no case has a nonzero coefficient difference
    """
    best, worst, n = 0.0, None, 0
    for idx, (f1, f2, w_diff) in enumerate(cases):
        for gamma, t in _admissible_grid(gammas, ts, kappa, t0):
            report = low_freq_coeff_estimate(f1, f2, gamma, t, w_diff, 1.0, m, R, kappa, t0)
            if report.lhs == 0.0:
                continue
            n += 1
            if report.required_c3 > best:
                best, worst = report.required_c3, f"case={idx},gamma={gamma},t={t:.4g}"
    if n == 0:
        raise CalibrationError("no active case for c3 calibration")
    logger.info(f"calibrated c3={best:.4g} over {n} active cases (worst {worst})")
    return CalibrationSummary(constant_name="c3", fitted_value=best, n_cases=n, max_ratio_case=worst)


def validate_c3(
    c3: float,
    cases: Sequence[Tuple[ContrastField, ContrastField, float]],
    gammas: Sequence,
    ts: Sequence[float],
    m: float = 2.0,
    R: float = 1.2 * math.pi,
    kappa: float = 1.0,
    t0: float = 0.0,
) -> C3Validation:
    """Check the estimate with a fixed c3 on held-out cases."""
    failures = []
    n = 0
    for idx, (f1, f2, w_diff) in enumerate(cases):
        for gamma, t in _admissible_grid(gammas, ts, kappa, t0):
            n += 1
            if not low_freq_coeff_estimate(f1, f2, gamma, t, w_diff, c3, m, R, kappa, t0).holds:
                failures.append(f"case={idx},gamma={gamma},t={t:.4g}")
    rate = 1.0 - len(failures) / n if n else 1.0
    return C3Validation(c3=c3, n_checked=n, n_failed=len(failures), pass_rate=rate, failures=failures)


def near_field_distance(f1: ContrastField, f2: ContrastField, operator) -> float:
    """||w1 - w2|| for the near-field operator's point sets."""
    return data_norm(operator.evaluate(f1) - operator.evaluate(f2))
