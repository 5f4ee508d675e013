"""Near-field and far-field forward operators with adjoint-state gradients."""

import math
from concurrent.futures import Executor
from typing import Optional, Tuple

import numpy as np
import structlog

from ..core.errors import AdmissibilityError, FormatError
from ..core.interfaces import ICacheStorage
from ..spectral.lattice import ContrastField, adjoint_evaluate
from ..utils.hashing import array_hash, config_hash, field_hash
from .scatter_data import ScatterData, data_norm
from .solver import LippmannSchwingerSolver
from .sphere import SpherePoints
from .volume import SolverConfig, fundamental_solution


logger = structlog.get_logger(__name__)


class ForwardOperator:
    """
    Maps a contrast to scattering data through Lippmann-Schwinger solves.

    Every datum has the form F0[a, b] + sum_j M[b, j] q_j u_a(x_j), where u_a is
    the total field for incidence a on the ball voxels x_j, q the contrast and
    M the receiver kernel including the cell volume. The misfit gradient uses
    one extra solve per incidence with the same system matrix, since the
    truncated volume potential is complex symmetric.
    """

    kind = "abstract"
    require_admissible = True

    def __init__(
        self,
        cfg: SolverConfig,
        sources: SpherePoints,
        receivers: SpherePoints,
        executor: Optional[Executor] = None,
        cache: Optional[ICacheStorage] = None,
    ):
        """
        Initialize the operator.

        Args:
            cfg: Solver configuration
            sources: Source points (near field) or incident directions (far field)
            receivers: Receiver points or observation directions
            executor: Optional executor for concurrent per-incidence solves
            cache: Optional forward-solve cache
        """
        self._check_geometry(sources, receivers)
        self.cfg = cfg
        self.sources = sources
        self.receivers = receivers
        self.solver = LippmannSchwingerSolver(cfg)
        self.grid = self.solver.grid
        self._executor = executor
        self._cache = cache
        self.incident = self._incident_matrix()
        self.measurement = self._measurement_matrix()
        self.background = self._background()

    def _check_geometry(self, sources: SpherePoints, receivers: SpherePoints) -> None:
        pass

    def _incident_matrix(self) -> np.ndarray:
        raise NotImplementedError

    def _measurement_matrix(self) -> np.ndarray:
        raise NotImplementedError

    def _background(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def _map(self):
        return self._executor.map if self._executor is not None else map

    def incidence_key(self) -> str:
        return f"{self.kind}:{array_hash(self.sources.content())}:{array_hash(self.receivers.content())}"

    def wrap(self, values: np.ndarray) -> ScatterData:
        return ScatterData(
            kind=self.data_kind,
            kappa=self.cfg.kappa,
            sources=self.sources,
            receivers=self.receivers,
            values=values,
        )

    @property
    def data_kind(self) -> str:
        return self.kind

    def check_data(self, data: ScatterData) -> None:
        if data.kind != self.data_kind or data.values.shape != (self.sources.size, self.receivers.size):
            raise FormatError(
                f"{data.kind} data of shape {data.values.shape} does not match the "
                f"{self.data_kind} configuration ({self.sources.size}, {self.receivers.size})"
            )

    def states(self, q: np.ndarray) -> np.ndarray:
        """Total fields for every incidence, one row per incidence."""
        results = self.solver.solve_many(q, list(self.incident), self._map)
        return np.array([u for u, _, _ in results])

    def data_from_states(self, q: np.ndarray, states: np.ndarray) -> np.ndarray:
        return self.background + (states * q) @ self.measurement.T

    def evaluate(self, f: ContrastField, contrast: Optional[np.ndarray] = None) -> ScatterData:
        """
        Compute the data of a contrast.

        Args:
            f: Contrast flagged in D
            contrast: Optional raw contrast samples on the ball voxels, bypassing f

        Returns:
            ScatterData with one row per incidence
        """
        key = None
        if self._cache is not None and contrast is None:
            key = (field_hash(f), self.incidence_key(), config_hash(self.cfg))
            hit = self._cache.get(*key)
            if hit is not None:
                shape, payload = hit
                logger.debug(f"forward cache hit for {key[0][:12]}")
                return self.wrap(np.frombuffer(payload, dtype="<c16").reshape(shape).copy())
        q = self.solver.contrast_samples(f, self.require_admissible) if contrast is None else np.asarray(contrast, dtype=complex)
        values = self.data_from_states(q, self.states(q))
        if key is not None:
            self._cache.put(*key, values.shape, values.astype("<c16").tobytes())
        return self.wrap(values)

    def adjoint_apply(self, f: ContrastField, residual: ScatterData) -> ContrastField:
        """Gradient of ||F(f) - g||^2 with respect to the coefficients, given residual = F(f) - g."""
        self.check_data(residual)
        q = self.solver.contrast_samples(f, self.require_admissible)
        return self._gradient(f, q, self.states(q), residual.values)

    def misfit_gradient(self, f: ContrastField, data: ScatterData) -> Tuple[float, ContrastField]:
        """Misfit ||F(f) - data||^2 and its coefficient gradient from one forward and one adjoint sweep."""
        self.check_data(data)
        q = self.solver.contrast_samples(f, self.require_admissible)
        states = self.states(q)
        residual = self.data_from_states(q, states) - data.values
        misfit = data_norm(self.wrap(residual)) ** 2
        return misfit, self._gradient(f, q, states, residual)

    def misfit(self, f: ContrastField, data: ScatterData) -> float:
        return data_norm(self.evaluate(f) - data) ** 2

    def _adjoint_states(self, q: np.ndarray, sources: np.ndarray) -> np.ndarray:
        results = self.solver.solve_many(q, list(sources), self._map)
        return np.array([psi for psi, _, _ in results])

    def _gradient(self, f: ContrastField, q: np.ndarray, states: np.ndarray, residual: np.ndarray) -> ContrastField:
        if not np.any(residual):
            return ContrastField.zeros(f.lattice)
        # m_a = sum_b W_b conj(r_ab) M_b
        adjoint_sources = (np.conj(residual) * self.receivers.weights) @ self.measurement
        psi = self._adjoint_states(q, adjoint_sources)
        rho = np.sum(self.sources.weights[:, None] * psi * states, axis=0)
        coeffs = 2.0 * adjoint_evaluate(f.lattice, self.grid.points, np.conj(rho))
        return ContrastField.from_coefficients(coeffs, f.lattice)


class NearFieldOperator(ForwardOperator):
    """Point sources and receivers on the sphere of radius R; data w_f(x, y)."""

    kind = "near_field"

    @classmethod
    def create(
        cls,
        cfg: SolverConfig,
        n_points: int,
        radius: Optional[float] = None,
        scheme: str = "gauss_product",
        **kwargs,
    ) -> "NearFieldOperator":
        """Sources on a quasi-uniform set of the sphere, receivers on a rotated copy avoiding the sources."""
        radius = cfg.radius_R if radius is None else radius
        sources = SpherePoints.create(n_points, radius, scheme)
        receivers = SpherePoints.create(n_points, radius, scheme, azimuth_shift=0.5)
        return cls(cfg, sources, receivers, **kwargs)

    def _check_geometry(self, sources: SpherePoints, receivers: SpherePoints) -> None:
        for points in (sources, receivers):
            if points.radius <= math.pi:
                raise AdmissibilityError(f"measurement radius {points.radius} must exceed pi")

    def _incident_matrix(self) -> np.ndarray:
        return fundamental_solution(self.sources.points, self.grid.points, self.cfg.kappa)

    def _measurement_matrix(self) -> np.ndarray:
        kappa = self.cfg.kappa
        return -(kappa ** 2) * self.grid.cell_volume * fundamental_solution(
            self.receivers.points, self.grid.points, kappa
        )

    def _background(self) -> np.ndarray:
        return fundamental_solution(self.sources.points, self.receivers.points, self.cfg.kappa)


class FarFieldOperator(ForwardOperator):
    """Plane waves with directions d and far-field patterns at directions x_hat."""

    kind = "far_field"

    @classmethod
    def create(cls, cfg: SolverConfig, n_dirs: int, scheme: str = "gauss_product", **kwargs) -> "FarFieldOperator":
        dirs = SpherePoints.create(n_dirs, 1.0, scheme)
        return cls(cfg, dirs, dirs, **kwargs)

    def _incident_matrix(self) -> np.ndarray:
        return np.exp(1j * self.cfg.kappa * self.sources.directions @ self.grid.points.T)

    def _measurement_matrix(self) -> np.ndarray:
        kappa = self.cfg.kappa
        phase = np.exp(-1j * kappa * self.receivers.directions @ self.grid.points.T)
        return -(kappa ** 2) * self.grid.cell_volume / (4.0 * math.pi) * phase

    def _background(self) -> np.ndarray:
        return np.zeros((self.sources.size, self.receivers.size), dtype=complex)


class BornNearFieldOperator(NearFieldOperator):
    """Near-field operator linearized at the zero contrast: the incident field replaces the total field."""

    kind = "born_near_field"
    require_admissible = False

    @property
    def data_kind(self) -> str:
        return "near_field"

    def states(self, q: np.ndarray) -> np.ndarray:
        return np.array(self.incident)

    def _adjoint_states(self, q: np.ndarray, sources: np.ndarray) -> np.ndarray:
        return sources

    def normal_matrix(self, lattice) -> Tuple[np.ndarray, np.ndarray]:
        """
        Dense matrix K with F(c) = F(0) + K c over flattened coefficients, and F(0).

        Intended for small lattices only.
        """
        n_coeffs = int(np.prod(lattice.shape))
        k = lattice.modes().astype(float)
        pts = self.grid.points
        e1 = np.exp(1j * np.outer(k, pts[:, 0]))
        e2 = np.exp(1j * np.outer(k, pts[:, 1]))
        e3 = np.exp(1j * np.outer(k, pts[:, 2]))
        basis = np.einsum("ap,bp,cp->abcp", e1, e2, e3).reshape(n_coeffs, -1) / (2.0 * math.pi) ** 1.5
        # K[(a, b), gamma] = sum_j M[b, j] u_a(x_j) e_gamma(x_j)
        K = np.einsum("bj,aj,gj->abg", self.measurement, self.incident, basis, optimize=True)
        return K.reshape(-1, n_coeffs), self.background.reshape(-1)


def near_field_data(
    f: ContrastField,
    R: float,
    n_points: int,
    cfg: SolverConfig,
    executor: Optional[Executor] = None,
    cache: Optional[ICacheStorage] = None,
) -> ScatterData:
    """Near-field data w_f(x, y) for sources and receivers on the sphere of radius R."""
    return NearFieldOperator.create(cfg, n_points, radius=R, executor=executor, cache=cache).evaluate(f)


def far_field_data(
    f: ContrastField,
    n_dirs: int,
    cfg: SolverConfig,
    executor: Optional[Executor] = None,
    cache: Optional[ICacheStorage] = None,
) -> ScatterData:
    """Far-field patterns u^inf(x_hat, d) for incident and observation directions on the unit sphere."""
    return FarFieldOperator.create(cfg, n_dirs, executor=executor, cache=cache).evaluate(f)


def operator_for(data: ScatterData, cfg: SolverConfig, **kwargs) -> ForwardOperator:
    """Forward operator matching the point sets of existing data."""
    if data.kind == "near_field":
        return NearFieldOperator(cfg, data.sources, data.receivers, **kwargs)
    return FarFieldOperator(cfg, data.sources, data.receivers, **kwargs)


def frechet_adjoint_apply(f: ContrastField, residual: ScatterData, cfg: SolverConfig) -> ContrastField:
    """Coefficient gradient of ||F(f) - g||^2 for the residual F(f) - g via adjoint solves."""
    return operator_for(residual, cfg).adjoint_apply(f, residual)
