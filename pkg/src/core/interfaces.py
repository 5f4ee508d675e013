"""Core interfaces for the vsclab application."""

from typing import Any, Dict, List, Optional, Protocol, Tuple, runtime_checkable

from pydantic import BaseModel, ConfigDict, Field


class ArtifactRecord(BaseModel):
    """One output file of a run, referenced by content hash."""

    path: str
    sha256: str
    size: int


class RunManifest(BaseModel):
    """Self-describing record of one CLI invocation."""

    model_config = ConfigDict(extra="allow")

    run_id: str
    subcommand: str
    version: str
    config: Dict[str, Any]
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: List[ArtifactRecord] = Field(default_factory=list)
    timings: Dict[str, float] = Field(default_factory=dict)
    exit_code: int = 0
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class CalibrationSummary(BaseModel):
    """Calibration report written as JSON."""

    constant_name: str
    fitted_value: float
    n_cases: int
    max_ratio_case: Optional[str] = None


@runtime_checkable
class ICacheStorage(Protocol):
    """Interface for the forward-solve cache."""

    def get(self, field_hash: str, incidence_key: str, config_hash: str) -> Optional[Tuple[Tuple[int, ...], bytes]]:
        """
        Look up a cached data payload.

        Args:
            field_hash: Content hash of the contrast
            incidence_key: Key of the incidence and measurement configuration
            config_hash: Content hash of the solver configuration

        Returns:
            (shape, payload bytes) if found, None otherwise
        """
        ...

    def put(
        self, field_hash: str, incidence_key: str, config_hash: str, shape: Tuple[int, ...], payload: bytes
    ) -> bool:
        """
        Store a data payload.

        Returns:
            True if stored, False if the key already existed
        """
        ...


@runtime_checkable
class IArtifactStorage(Protocol):
    """Interface for artifact writers."""

    def write_bytes(self, name: str, data: bytes) -> ArtifactRecord:
        """Write raw bytes below the run directory and return the hashed record."""
        ...

    def write_text(self, name: str, text: str) -> ArtifactRecord:
        """Write UTF-8 text below the run directory and return the hashed record."""
        ...


@runtime_checkable
class IForwardOperator(Protocol):
    """Interface shared by the near-field, far-field and linearized operators."""

    kind: str

    def evaluate(self, f) -> Any:
        """Data F(f) as ScatterData."""
        ...

    def adjoint_apply(self, f, residual) -> Any:
        """Gradient of ||F(f) - g||^2 for residual F(f) - g, as a ContrastField."""
        ...

    def misfit_gradient(self, f, data) -> Tuple[float, Any]:
        """Misfit ||F(f) - data||^2 and its gradient."""
        ...
