"""Lab manager: runs one subcommand, writes its artifacts and the run manifest."""

import asyncio
import csv
import functools
import io
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Awaitable, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pyee import EventEmitter

from .. import __version__
from ..config import LabConfig
from ..core.errors import AdmissibilityError, ConfigurationError, VscLabError
from ..core.interfaces import ICacheStorage, RunManifest
from ..forward.operators import FarFieldOperator, ForwardOperator, NearFieldOperator
from ..forward.scatter_data import data_norm
from ..gos.checks import C1Accumulator, calibrate_c3, identity_bound_check, validate_c3, verify_gos_bounds
from ..gos.faddeev import solve_gos
from ..gos.frequencies import admissible_t, zeta_eta
from ..regularization.experiments import (
    ExperimentLog,
    add_noise,
    fit_through_origin,
    sweep_entry,
)
from ..regularization.psi import PsiFunction, alpha_rule, rate_bound
from ..regularization.tikhonov import TikhonovProblem, TikhonovSolver
from ..spectral.lattice import ContrastField, Lattice, sobolev_norm, truncation_diagnostics
from ..spectral.phantoms import enveloped_random, random_band_limited, smooth_bump
from ..spectral.sums import embedding_constant, high_freq_split_check, lattice_sum_bound_check
from ..storage.field_io import data_to_bytes, field_to_bytes, load_field
from ..storage.storage_impl import ArtifactStorage
from ..utils.hashing import config_hash, field_hash
from ..vsc.near_far import fit_near_to_far, near_to_far_check, psi_composition_far, validate_near_to_far
from ..vsc.proof_trace import proof_parameter_trace
from ..vsc.source_condition import (
    VscCase,
    calibrate_from_cases,
    perturbation_family,
    stability_check,
    validate_constant,
    vsc_check,
)


logger = structlog.get_logger(__name__)

SUBCOMMANDS = (
    "forward",
    "gos-check",
    "vsc-calibrate",
    "stability-check",
    "tikhonov",
    "rate-sweep",
    "near-to-far-check",
    "lattice-audit",
)

LATTICE_AUDIT_LAMBDAS = (-3.0, -2.0, 0.0, 1.0, 2.0)
SPLIT_CHECK_PAIRS = 100


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def default_run_id(config: LabConfig) -> str:
    """Run id derived from the configuration content and its seed, so reruns land in the same place."""
    return f"{config_hash(config)[:10]}-s{config.run.seed}"


def _integer_modes(gamma_max: int) -> List[Tuple[int, int, int]]:
    r = range(-gamma_max, gamma_max + 1)
    return [(a, b, c) for a in r for b in r for c in r]


class LabManager:
    """Coordinates the numerical modules for one CLI invocation."""

    def __init__(
        self,
        config: LabConfig,
        storage: Optional[ArtifactStorage] = None,
        cache: Optional[ICacheStorage] = None,
        run_id: Optional[str] = None,
    ):
        """
        Initialize the LabManager.

        Args:
            config: Effective run configuration
            storage: Artifact writer; defaults to <run.output>/<run_id>
            cache: Optional forward-solve cache shared by all operators
            run_id: Identifier of the run; derived from the configuration hash and seed when omitted
        """
        self.config = config
        self.run_id = run_id or default_run_id(config)
        self.storage = storage or ArtifactStorage(f"{config.run.output.rstrip('/')}/{self.run_id}")
        self._cache = cache
        self._executor = ThreadPoolExecutor(max_workers=config.run.jobs, thread_name_prefix="vsclab")
        self._emitter = EventEmitter()
        self._inputs: Dict[str, str] = {}
        self._timings: Dict[str, float] = {}
        self._diagnostics: Dict[str, Any] = {}
        self._handlers: Dict[str, Callable[[], Awaitable[Dict[str, Any]]]] = {
            "forward": self._forward,
            "gos-check": self._gos_check,
            "vsc-calibrate": self._vsc_calibrate,
            "stability-check": self._stability_check,
            "tikhonov": self._tikhonov,
            "rate-sweep": self._rate_sweep,
            "near-to-far-check": self._near_to_far_check,
            "lattice-audit": self._lattice_audit,
        }

        self.on("record", self._log_record)
        self.on("case", self._log_case)

    def on(self, event_type: str, callback: Callable) -> None:
        """
        Register a progress callback.

        Args:
            event_type: "record" (sweep entries), "case" (calibration cases) or "iteration"
            callback: Called with the event payload
        """
        self._emitter.on(event_type, callback)

    def _log_record(self, record) -> None:
        logger.info(f"sweep entry delta={record.delta:.3e} err_hm={record.err_hm:.4e}")

    def _log_case(self, case: VscCase) -> None:
        logger.debug(f"case {case.case_id}: lhs={case.lhs:.4e} rhs={case.rhs:.4e} branch={case.branch}")

    async def _offload(self, fn: Callable, *args, **kwargs):
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._executor, functools.partial(fn, *args, **kwargs))

    async def _timed(self, label: str, fn: Callable, *args, **kwargs):
        start = time.perf_counter()
        try:
            return await self._offload(fn, *args, **kwargs)
        finally:
            self._timings[label] = self._timings.get(label, 0.0) + time.perf_counter() - start

    # Shared inputs

    @property
    def lattice(self) -> Lattice:
        return self.config.lattice.build()

    def phantom(self) -> ContrastField:
        """The true contrast selected by the [data] section."""
        data = self.config.data
        if data.phantom == "file":
            if not data.field_path:
                raise ConfigurationError("data.phantom = 'file' needs data.field_path")
            try:
                f = load_field(data.field_path)
            except OSError as e:
                raise ConfigurationError(f"cannot read contrast file {data.field_path}: {e}") from e
        elif data.phantom == "zero":
            f = ContrastField.zeros(self.lattice)
        else:
            f = smooth_bump(self.lattice, data.phantom_amplitude, data.phantom_radius)
        self._inputs["f_dagger"] = field_hash(f)
        return f

    def operator(self, kind: Optional[str] = None) -> ForwardOperator:
        kind = kind or self.config.data.kind
        data = self.config.data
        if kind == "far":
            return FarFieldOperator.create(self.config.solver, data.n_dirs, data.scheme, cache=self._cache)
        return NearFieldOperator.create(self.config.solver, data.n_sources, scheme=data.scheme, cache=self._cache)

    def psi(self, kind: Optional[str] = None, constant: Optional[float] = None) -> PsiFunction:
        kind = kind or self.config.data.kind
        p = self.config.psi
        if kind == "far":
            return PsiFunction.far(p.B if constant is None else constant, self.config.mu, p.theta)
        return PsiFunction.near(p.A if constant is None else constant, self.config.mu)

    # Subcommands

    async def _forward(self) -> Dict[str, Any]:
        f = self.phantom()
        operator = self.operator()
        data = await self._timed("forward_solve", operator.evaluate, f)
        self.storage.write_bytes("field.bin", field_to_bytes(f))
        self.storage.write_bytes("data.bin", data_to_bytes(data))
        summary = {
            "kind": data.kind,
            "kappa": data.kappa,
            "shape": list(data.values.shape),
            "data_norm": data_norm(data),
            "max_abs": float(np.max(np.abs(data.values))) if data.values.size else 0.0,
            "truncation": truncation_diagnostics(f, self.config.sobolev.s),
        }
        self.storage.write_json("forward.json", summary)
        return summary

    def _pair(self, index: int) -> Tuple[ContrastField, ContrastField]:
        gos = self.config.gos
        seed = self.config.run.seed + 2 * index
        f1 = enveloped_random(self.lattice, seed, gos.pair_amplitude)
        f2 = enveloped_random(self.lattice, seed + 1, gos.pair_amplitude)
        return f1, f2

    async def _pair_distance(self, index: int, operator: ForwardOperator) -> Tuple[ContrastField, ContrastField, float]:
        f1, f2 = self._pair(index)
        w1, w2 = await asyncio.gather(self._offload(operator.evaluate, f1), self._offload(operator.evaluate, f2))
        return f1, f2, data_norm(w1 - w2)

    def _identity_case(self, f1: ContrastField, f2: ContrastField, operator: ForwardOperator, gamma, t: float):
        cfg = self.config.solver
        zeta, eta = zeta_eta(gamma, t, cfg.kappa)
        tol = self.config.gos.residual_tolerance
        u1 = solve_gos(f1, zeta, cfg, residual_tolerance=tol)
        u2 = solve_gos(f2, eta, cfg, residual_tolerance=tol)
        return identity_bound_check(f1, f2, u1, u2, operator.evaluate(f1), operator.evaluate(f2), tolerance=tol)

    async def _gos_check(self) -> Dict[str, Any]:
        gos = self.config.gos
        cfg = self.config.solver
        f = self.phantom()
        ts = [float(t) for t in np.geomspace(gos.t_min, gos.t_max, gos.n_t)]
        bounds = await self._timed("gos_sweep", verify_gos_bounds, f, ts, cfg)
        self.storage.write_text(
            "gos_bounds.csv",
            _csv(
                ("t", "v_l2", "bound_ratio", "u_scaled", "residual"),
                [(r.t, r.v_l2, r.bound_ratio, r.u_scaled, r.residual) for r in bounds.per_t],
            ),
        )

        operator = self.operator("near")
        n_cal, n_val = gos.n_calibration_pairs, gos.n_held_out_pairs
        pairs = await asyncio.gather(*(self._pair_distance(i, operator) for i in range(n_cal + n_val)))
        gammas = _integer_modes(gos.gamma_max)
        m, R, kappa = self.config.sobolev.m, cfg.radius_R, cfg.kappa
        # t0 covers every pair, so calibration and validation only use t >= t0
        t0 = max(admissible_t(max(a.sup_norm(), b.sup_norm()), kappa, 2.0 * R) for a, b, _ in pairs)
        c3 = await self._timed("c3_calibration", calibrate_c3, pairs[:n_cal], gammas, ts, m, R, kappa, t0)
        c3_check = await self._timed(
            "c3_validation", validate_c3, c3.fitted_value, pairs[n_cal:], gammas, ts, m, R, kappa, t0
        )

        # integral identity bound on the calibration pairs, at the smallest admissible t of the sweep
        gamma = (1, 0, 0) if gos.gamma_max >= 1 else (0, 0, 0)
        t = max(ts[0], t0)
        reports = await asyncio.gather(
            *(self._offload(self._identity_case, f1, f2, operator, gamma, t) for f1, f2, _ in pairs[:n_cal])
        )
        c1 = C1Accumulator()
        for idx, report in enumerate(reports):
            c1.add(report, f"pair{idx}")
        self.storage.write_text(
            "identity_bound.csv",
            _csv(
                ("pair", "lhs", "log_rhs_over_c1", "c1_fit"),
                [(i, r.lhs, r.log_rhs_over_c1, r.c1_fit) for i, r in enumerate(reports)],
            ),
        )
        summary = {
            "gos_bounds": bounds.model_dump(exclude={"per_t"}),
            "c3": c3.model_dump(),
            "c3_validation": c3_check.model_dump(),
            "c1_fit": c1.c1,
            "c1_worst_case": c1.worst,
            "t0": t0,
            "identity_t": t,
            "identity_gamma": list(gamma),
        }
        self.storage.write_json("gos_check.json", summary)
        return summary

    async def _evaluate(
        self,
        f_dagger: ContrastField,
        family: Sequence[Tuple[str, ContrastField]],
        psi: PsiFunction,
        operator: ForwardOperator,
    ) -> List[VscCase]:
        data_dagger = await self._offload(operator.evaluate, f_dagger)
        beta = self.config.vsc.beta

        async def one(case_id: str, f: ContrastField) -> VscCase:
            case = await self._offload(
                vsc_check,
                f_dagger,
                f,
                psi,
                beta,
                operator=operator,
                params=self.config.sobolev,
                data_dagger=data_dagger,
                case_id=case_id,
            )
            self._emitter.emit("case", case)
            return case

        return list(await asyncio.gather(*(one(case_id, f) for case_id, f in family)))

    def _case_rows(self, cases: Sequence[VscCase]) -> str:
        return _csv(
            ("case_id", "branch", "diff_norm_sq", "data_dist_sq", "inner", "required_constant", "lhs", "rhs"),
            [
                (c.case_id, c.branch, c.diff_norm_sq, c.data_dist_sq, c.inner, c.required_constant, c.lhs, c.rhs)
                for c in cases
            ],
        )

    async def _vsc_calibrate(self) -> Dict[str, Any]:
        vsc = self.config.vsc
        seed = self.config.run.seed
        f_dagger = self.phantom()
        operator = self.operator()
        shape = self.psi(constant=1.0)
        calibration = perturbation_family(f_dagger, vsc.amplitudes, seed, n_random=vsc.n_random, prefix="cal")
        held_out = perturbation_family(
            f_dagger, vsc.held_out_amplitudes, seed + 1000, n_random=vsc.n_random, prefix="val"
        )
        start = time.perf_counter()
        cases = await self._evaluate(f_dagger, calibration, shape, operator)
        held = await self._evaluate(f_dagger, held_out, shape, operator)
        self._timings["case_evaluation"] = time.perf_counter() - start

        report = calibrate_from_cases(cases, shape, vsc.beta)
        validation = validate_constant(report, held, vsc.validation_factor)
        self.storage.write_text("calibration_cases.csv", self._case_rows(cases))
        self.storage.write_text("held_out_cases.csv", self._case_rows(held))
        summary = {
            "calibration": report.model_dump(mode="json"),
            "validation": validation.model_dump(),
            "cases": [c.summary() for c in cases],
        }
        self.storage.write_json("vsc_calibration.json", summary)
        if validation.n_failed:
            logger.warning(f"{validation.n_failed} held-out cases fail with {validation.constant:.4g}")
        return {"calibration": summary["calibration"], "validation": summary["validation"]}

    async def _stability_check(self) -> Dict[str, Any]:
        vsc = self.config.vsc
        f_dagger = self.phantom()
        operator = self.operator()
        psi = self.psi()
        family = perturbation_family(f_dagger, vsc.amplitudes, self.config.run.seed, n_random=vsc.n_random)
        reports = await asyncio.gather(
            *(
                self._timed("stability", stability_check, f_dagger, f, psi, operator=operator, m=self.config.sobolev.m)
                for _, f in family
            )
        )
        rows = [(case_id, r.lhs, r.rhs, r.data_distance, r.holds) for (case_id, _), r in zip(family, reports)]
        self.storage.write_text("stability.csv", _csv(("case_id", "lhs", "rhs", "data_distance", "holds"), rows))
        failed = [row[0] for row in rows if not row[4]]
        summary = {
            "psi": psi.model_dump(),
            "n_cases": len(rows),
            "n_failed": len(failed),
            "failures": failed,
        }
        self.storage.write_json("stability.json", summary)
        return summary

    async def _tikhonov(self) -> Dict[str, Any]:
        tik = self.config.tikhonov
        m = self.config.sobolev.m
        f_dagger = self.phantom()
        operator = self.operator()
        psi = self.psi()
        clean = await self._timed("forward_solve", operator.evaluate, f_dagger)
        noisy = add_noise(clean, tik.delta, self.config.run.seed)
        alpha = tik.alpha if tik.alpha is not None else alpha_rule(psi, tik.delta)
        solver = TikhonovSolver(
            operator,
            TikhonovProblem(data=noisy, alpha=alpha, penalty_m=m),
            max_iterations=tik.max_iterations,
            tolerance=tik.tolerance,
            armijo=tik.armijo,
        )
        solver.on("iteration", lambda event: self._emitter.emit("iteration", event))
        solver.on("iteration", lambda event: logger.debug(f"iteration {event['iteration']}: {event['objective']:.6e}"))
        f, diag = await self._timed("minimize", solver.minimize, ContrastField.zeros(f_dagger.lattice))

        self.storage.write_bytes("reconstruction.bin", field_to_bytes(f))
        self.storage.write_text(
            "objective.csv", _csv(("iteration", "objective"), list(enumerate(diag.objective_history)))
        )
        summary = {
            "delta": tik.delta,
            "alpha": alpha,
            "err_hm": sobolev_norm(f - f_dagger, m),
            "diagnostics": diag.model_dump(),
        }
        self.storage.write_json("tikhonov.json", summary)
        return summary

    async def _rate_sweep(self) -> Dict[str, Any]:
        tik = self.config.tikhonov
        seed = self.config.run.seed
        deltas = list(self.config.sweep.deltas)
        if not deltas or any(d <= 0 for d in deltas):
            raise ConfigurationError("rate sweeps need positive noise levels")
        f_dagger = self.phantom()
        operator = self.operator()
        psi = self.psi()
        clean = await self._timed("forward_solve", operator.evaluate, f_dagger)

        async def entry(i: int, delta: float):
            record = await self._timed(
                "sweep_entries",
                sweep_entry,
                f_dagger,
                clean,
                operator,
                psi,
                delta,
                seed + i,
                self.config.sobolev.m,
                max_iterations=tik.max_iterations,
                tolerance=tik.tolerance,
                armijo=tik.armijo,
            )
            self._emitter.emit("record", record)
            return record

        log = ExperimentLog(await asyncio.gather(*(entry(i, d) for i, d in enumerate(deltas)))).sorted()
        self.storage.write_text("sweep.csv", log.to_csv())
        self.storage.write_text("sweep_plot.dat", log.plot_text(psi))
        rows = log.plot_rows(psi)
        slope, r2 = fit_through_origin([x for x, _ in rows], [y for _, y in rows])
        bounds = [rate_bound(psi, r.delta, self.config.vsc.beta) for r in log.records]
        summary = {
            "psi": psi.model_dump(),
            "n_records": len(log),
            "slope": slope,
            "r_squared": r2,
            "bound_holds": [bool(r.err_hm <= b) for r, b in zip(log.records, bounds)],
            "rate_bounds": bounds,
        }
        self.storage.write_json("sweep.json", summary)
        return summary

    async def _near_to_far_check(self) -> Dict[str, Any]:
        vsc = self.config.vsc
        cfg = self.config.solver
        f_dagger = self.phantom()
        near = NearFieldOperator.create(
            cfg, self.config.data.n_sources, radius=2.0 * cfg.radius_R, scheme=self.config.data.scheme, cache=self._cache
        )
        far = self.operator("far")
        amplitudes = [float(a) for a in np.geomspace(1e-1, 1e-3, vsc.n_near_far_cases)]
        family = perturbation_family(f_dagger, amplitudes, self.config.run.seed, n_random=0, prefix="nf")

        async def one(case_id: str, f: ContrastField):
            try:
                return await self._timed(
                    "near_far_cases",
                    near_to_far_check,
                    f_dagger,
                    f,
                    self.config.psi.theta,
                    cfg,
                    vsc.far_threshold,
                    near_operator=near,
                    far_operator=far,
                    case_id=case_id,
                )
            except AdmissibilityError as e:
                logger.warning(f"case {case_id} skipped: {e}")
                return None

        reports = [r for r in await asyncio.gather(*(one(cid, f) for cid, f in family)) if r is not None]
        fit_set, held_out = reports[0::2], reports[1::2]
        fit = fit_near_to_far(fit_set, self.config.psi.theta)
        validation = validate_near_to_far(held_out, fit)
        psi_far = psi_composition_far(self.psi("near"), self.config.psi.theta, fit, vsc.far_threshold)
        self.storage.write_text(
            "near_far.csv",
            _csv(
                ("case_id", "near_norm_sq", "far_norm"),
                [(r.case_id, r.near_norm_sq, r.far_norm) for r in reports],
            ),
        )
        summary = {
            "fit": fit.model_dump(),
            "validation": validation.model_dump(),
            "n_skipped": len(family) - len(reports),
            "psi_far": psi_far.model_dump(),
        }
        self.storage.write_json("near_far.json", summary)
        return summary

    def _split_rows(self, rhos: Sequence[float]) -> List[Tuple]:
        lattice = self.lattice
        seed = self.config.run.seed
        rows = []
        for i in range(SPLIT_CHECK_PAIRS):
            f_dagger = random_band_limited(lattice, seed + 2 * i)
            f = random_band_limited(lattice, seed + 2 * i + 1)
            for rho in rhos:
                report = high_freq_split_check(f_dagger, f, self.config.sobolev, rho)
                rows.append((i, rho, report.lhs, report.rhs, report.holds))
        return rows

    async def _lattice_audit(self) -> Dict[str, Any]:
        params = self.config.sobolev
        rhos = [float(r) for r in np.geomspace(1.0, 50.0, 12)]
        sums = await asyncio.gather(
            *(self._timed("lattice_sums", lattice_sum_bound_check, lam, rhos) for lam in LATTICE_AUDIT_LAMBDAS)
        )
        split_rhos = [1.0, 1.5, 2.0, float(self.lattice.max_degree)]
        split = await self._timed("split_checks", self._split_rows, split_rhos)
        traces = [
            proof_parameter_trace(delta, params, self.config.solver.radius_R, self.config.solver.kappa)
            for delta in self.config.sweep.deltas
        ]

        self.storage.write_text(
            "lattice_sums.csv",
            _csv(
                ("lambda", "rho", "ratio"),
                [(report.lam, rho, ratio) for report in sums for rho, ratio in zip(report.rhos, report.ratios)],
            ),
        )
        self.storage.write_text("split_checks.csv", _csv(("pair", "rho", "lhs", "rhs", "holds"), split))
        self.storage.write_text(
            "proof_trace.csv",
            _csv(
                ("delta", "t", "rho", "tau", "exponent", "delta_max", "admissible", "regime"),
                [(p.delta, p.t, p.rho, p.tau, p.exponent, p.delta_max, p.admissible, p.regime) for p in traces],
            ),
        )
        summary = {
            "embedding_constant": embedding_constant(params.m, self.lattice),
            "lattice_sums": [r.model_dump(exclude={"rhos", "ratios"}) for r in sums],
            "split_checks": {"n_checked": len(split), "n_failed": sum(1 for row in split if not row[4])},
        }
        self.storage.write_json("lattice_audit.json", summary)
        return summary

    # Run

    async def run(self, subcommand: str) -> int:
        """
        Run one subcommand and write its manifest.

        Args:
            subcommand: One of SUBCOMMANDS

        Returns:
            Exit code: 0 on success, 2 for configuration errors, 3 for numerical failures
        """
        structlog.contextvars.bind_contextvars(run_id=self.run_id, subcommand=subcommand)
        handler = self._handlers.get(subcommand)
        self._inputs["config"] = config_hash(self.config)
        start = time.perf_counter()
        exit_code = 0
        try:
            if handler is None:
                raise ConfigurationError(f"unknown subcommand {subcommand!r}")
            logger.info(f"Starting {subcommand} run {self.run_id}")
            self._diagnostics["summary"] = await handler()
            logger.info(f"{subcommand} finished")
        except VscLabError as e:
            exit_code = e.exit_code
            self._diagnostics["error"] = {"type": type(e).__name__, "message": str(e)}
            for attr in ("residual", "iterations", "symbol_min"):
                if getattr(e, attr, None) is not None:
                    self._diagnostics["error"][attr] = getattr(e, attr)
            logger.error(f"{subcommand} failed: {e}")
        except Exception as e:
            exit_code = VscLabError.exit_code
            self._diagnostics["error"] = {"type": type(e).__name__, "message": str(e)}
            logger.exception(f"{subcommand} failed with an unexpected error: {e}")
        finally:
            self._timings["total"] = time.perf_counter() - start
            self.write_manifest(subcommand, exit_code)
            structlog.contextvars.unbind_contextvars("run_id", "subcommand")
        return exit_code

    def write_manifest(self, subcommand: str, exit_code: int) -> RunManifest:
        manifest = RunManifest(
            run_id=self.run_id,
            subcommand=subcommand,
            version=__version__,
            config=self.config.model_dump(mode="json"),
            inputs=dict(self._inputs),
            outputs=sorted(self.storage.records.values(), key=lambda r: r.path),
            timings={k: round(v, 6) for k, v in self._timings.items()},
            exit_code=exit_code,
            diagnostics=self._diagnostics,
        )
        self.storage.write_json("manifest.json", manifest)
        return manifest

    def close(self) -> None:
        self._executor.shutdown(wait=True)
