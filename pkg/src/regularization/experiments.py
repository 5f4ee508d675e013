"""Noise synthesis and convergence-rate sweeps."""

import csv
import io
import math
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from ..core.errors import ConfigurationError
from ..forward.operators import FarFieldOperator, ForwardOperator, NearFieldOperator
from ..forward.scatter_data import ScatterData, data_norm
from ..forward.volume import SolverConfig
from ..spectral.lattice import ContrastField, sobolev_norm
from .psi import PsiFunction, alpha_rule, rate_abscissa
from .tikhonov import TikhonovProblem, TikhonovSolver


logger = structlog.get_logger(__name__)

CSV_COLUMNS = ("delta", "alpha", "err_hm", "misfit", "iterations", "seed")


def add_noise(data: ScatterData, delta: float, seed: int) -> ScatterData:
    """Add complex Gaussian noise rescaled to quadrature norm exactly delta."""
    if delta < 0:
        raise ConfigurationError(f"noise level must be nonnegative, got {delta}")
    if delta == 0:
        return data.with_values(data.values.copy())
    rng = np.random.default_rng(seed)
    shape = data.values.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    noise *= delta / data_norm(data.with_values(noise))
    return data.with_values(data.values + noise)


class ExperimentRecord(BaseModel):
    """One entry of a noise-level sweep."""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(ge=0)
    alpha: float = Field(ge=0)
    err_hm: float = Field(ge=0)
    misfit: float = Field(ge=0)
    seed: int = Field(ge=0)
    iterations: int = Field(ge=0)
    converged: bool = True
    kind: str = "near_field"


class ExperimentLog:
    """Append-only collection of experiment records."""

    def __init__(self, records: Iterable[ExperimentRecord] = ()):
        self._records: List[ExperimentRecord] = list(records)

    def append(self, record: ExperimentRecord) -> None:
        self._records.append(record)

    @property
    def records(self) -> Tuple[ExperimentRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def sorted(self) -> "ExperimentLog":
        return ExperimentLog(sorted(self._records, key=lambda r: r.delta))

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self._records:
            writer.writerow([repr(r.delta), repr(r.alpha), repr(r.err_hm), repr(r.misfit), r.iterations, r.seed])
        return buffer.getvalue()

    def plot_rows(self, psi: PsiFunction) -> List[Tuple[float, float]]:
        """(ln(3 + delta^-2))^(-mu) against err_hm."""
        return [(rate_abscissa(psi, r.delta), r.err_hm) for r in self._records if r.delta > 0]

    def plot_text(self, psi: PsiFunction) -> str:
        return "".join(f"{x!r} {y!r}\n" for x, y in self.plot_rows(psi))


def fit_through_origin(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """
    Least-squares slope of y = k x and its coefficient of determination.

    R^2 compares the residual with the centered spread of y.
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.size == 0 or not np.any(xs):
        return 0.0, 0.0
    slope = float(np.dot(xs, ys) / np.dot(xs, xs))
    ss_res = float(np.sum((ys - slope * xs) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return slope, r2


def build_operator(kind: str, cfg: SolverConfig, n_points: int, **kwargs) -> ForwardOperator:
    if kind in ("near", "near_field"):
        return NearFieldOperator.create(cfg, n_points, **kwargs)
    if kind in ("far", "far_field"):
        return FarFieldOperator.create(cfg, n_points, **kwargs)
    raise ConfigurationError(f"unknown data kind {kind!r}")


def sweep_entry(
    f_dagger: ContrastField,
    clean: ScatterData,
    operator: ForwardOperator,
    psi: PsiFunction,
    delta: float,
    seed: int,
    m: float = 2.0,
    **solver_options,
) -> ExperimentRecord:
    """Noisy data, parameter choice and one minimization for a single noise level."""
    noisy = add_noise(clean, delta, seed)
    alpha = alpha_rule(psi, delta)
    problem = TikhonovProblem(data=noisy, alpha=alpha, penalty_m=m)
    f, diag = TikhonovSolver(operator, problem, **solver_options).minimize(ContrastField.zeros(f_dagger.lattice))
    return ExperimentRecord(
        delta=delta,
        alpha=alpha,
        err_hm=sobolev_norm(f - f_dagger, m),
        misfit=math.sqrt(diag.misfit_sq),
        seed=seed,
        iterations=diag.iterations,
        converged=diag.converged,
        kind=clean.kind,
    )


def rate_sweep(
    f_dagger: ContrastField,
    psi: PsiFunction,
    deltas: Sequence[float],
    kind: str,
    cfg: SolverConfig,
    n_points: int = 12,
    m: float = 2.0,
    seed: int = 0,
    operator: Optional[ForwardOperator] = None,
    map_fn: Callable = map,
    **solver_options,
) -> List[ExperimentRecord]:
    """
    Reconstruct f_dagger from noisy data at each noise level with the a-priori alpha.

    Entries are independent; map_fn may dispatch them concurrently. Entry i uses
    seed + i, so the sweep is reproducible for a fixed seed.

    Returns:
        Records sorted by delta
    """
    if not deltas or any(d <= 0 for d in deltas):
        raise ConfigurationError("rate sweeps need positive noise levels")
    operator = build_operator(kind, cfg, n_points) if operator is None else operator
    clean = operator.evaluate(f_dagger)

    def run(item):
        i, delta = item
        record = sweep_entry(f_dagger, clean, operator, psi, delta, seed + i, m, **solver_options)
        logger.info(f"delta={delta:.3e}: alpha={record.alpha:.3e}, err_hm={record.err_hm:.4e}")
        return record

    records = list(map_fn(run, list(enumerate(deltas))))
    return sorted(records, key=lambda r: r.delta)
