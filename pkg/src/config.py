"""Configuration settings for the vsclab laboratory."""

import math
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.core.errors import ConfigurationError
from src.forward.volume import SolverConfig
from src.spectral.lattice import Lattice
from src.spectral.sums import SobolevParams

load_dotenv()


class Config:
    """Environment configuration for the vsclab application."""

    # Class-level storage for dynamic updates
    _dynamic_settings = {}

    def __init__(self):
        """Initialize configuration with environment variables and defaults."""
        # Forward-solve cache (unset disables caching)
        self.cache_path = os.getenv("VSC_LAB_CACHE", "")

        # Output root, a local directory or any fsspec URL
        self.output_root = os.getenv("VSC_LAB_OUTPUT", "./runs")

        # Logging configuration
        self.logging_level = os.getenv("VSC_LAB_LOG_LEVEL", "INFO")
        self.log_file = os.getenv("VSC_LAB_LOG_FILE", "")

        # Worker threads for independent solves
        self.jobs = int(os.getenv("VSC_LAB_JOBS", "1"))

    def get(self, key, default=None):
        """Get a configuration value with fallback to default."""
        if key in self._dynamic_settings:
            return self._dynamic_settings[key]
        if hasattr(self, key):
            return getattr(self, key)
        return default

    @classmethod
    def update(cls, settings_dict):
        """Update configuration with dynamic settings."""
        global _config
        cls._dynamic_settings.update(settings_dict)
        _config = None
        return cls._dynamic_settings


# Global config instance
_config = None


def get_config():
    """Get the global configuration object.

    Returns:
        dict: A dictionary with configuration values
    """
    global _config
    if _config is None:
        config_obj = Config()
        _config = {
            "cache_path": config_obj.cache_path,
            "output_root": config_obj.output_root,
            "logging_level": config_obj.logging_level,
            "log_file": config_obj.log_file,
            "jobs": config_obj.jobs,
        }
        _config.update(Config._dynamic_settings)
    return _config


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeSection(_Section):
    max_degree: int = 4
    grid_size: int = 0

    def build(self) -> Lattice:
        return Lattice(max_degree=self.max_degree, grid_size=self.grid_size)


class DataSection(_Section):
    kind: Literal["near", "far"] = "near"
    n_sources: int = Field(default=12, ge=6)
    n_dirs: int = Field(default=12, ge=6)
    scheme: Literal["gauss_product", "fibonacci"] = "gauss_product"
    # bump: smooth ball phantom; zero: f = 0; file: binary field at field_path
    phantom: Literal["bump", "zero", "file"] = "bump"
    field_path: str = ""
    phantom_amplitude: float = 0.2
    phantom_radius: float = 0.8 * math.pi


class PsiSection(_Section):
    A: float = Field(default=1.0, gt=0)
    B: float = Field(default=1.0, gt=0)
    theta: float = Field(default=0.9, gt=0, lt=1)
    mu: Optional[float] = Field(default=None, gt=0, le=1)


class TikhonovSection(_Section):
    alpha: Optional[float] = Field(default=None, gt=0)
    delta: float = Field(default=1e-2, gt=0)
    max_iterations: int = Field(default=100, ge=1)
    tolerance: float = Field(default=1e-6, gt=0)
    armijo: float = Field(default=1e-4, gt=0, lt=1)


class SweepSection(_Section):
    deltas: List[float] = Field(default_factory=lambda: [1e-1, 10 ** -1.75, 10 ** -2.5, 10 ** -3.25, 1e-4])


class GosSection(_Section):
    t_min: float = Field(default=10.0, gt=0)
    t_max: float = Field(default=100.0, gt=0)
    n_t: int = Field(default=6, ge=2)
    gamma_max: int = Field(default=1, ge=0)
    residual_tolerance: float = Field(default=1e-6, gt=0)
    n_calibration_pairs: int = Field(default=20, ge=1)
    n_held_out_pairs: int = Field(default=50, ge=0)
    pair_amplitude: float = Field(default=0.05, gt=0)


class VscSection(_Section):
    beta: float = Field(default=0.5, gt=0, le=1)
    amplitudes: List[float] = Field(default_factory=lambda: [0.01, 0.05, 0.2, 1.0, 5.0])
    held_out_amplitudes: List[float] = Field(default_factory=lambda: [0.02, 0.1, 0.5, 2.0, 8.0])
    n_random: int = Field(default=2, ge=0)
    validation_factor: float = Field(default=1.05, ge=1)
    far_threshold: float = Field(default=1.0, gt=0)
    n_near_far_cases: int = Field(default=8, ge=2)


class RunSection(_Section):
    output: str = "./runs"
    jobs: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    log_level: str = "INFO"


class LabConfig(BaseModel):
    """Effective configuration of one run; every field has an explicit default."""

    model_config = ConfigDict(extra="forbid")

    lattice: LatticeSection = Field(default_factory=LatticeSection)
    sobolev: SobolevParams = Field(default_factory=SobolevParams)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    data: DataSection = Field(default_factory=DataSection)
    psi: PsiSection = Field(default_factory=PsiSection)
    tikhonov: TikhonovSection = Field(default_factory=TikhonovSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    gos: GosSection = Field(default_factory=GosSection)
    vsc: VscSection = Field(default_factory=VscSection)
    run: RunSection = Field(default_factory=RunSection)

    @property
    def mu(self) -> float:
        return self.psi.mu if self.psi.mu is not None else self.sobolev.mu

    def with_overrides(self, overrides: Dict[str, Any]) -> "LabConfig":
        """Apply dotted-key overrides such as {"solver.kappa": 2.0}; None values are skipped."""
        tree = self.model_dump()
        for key, value in overrides.items():
            if value is None:
                continue
            section, _, name = key.partition(".")
            if not name:
                raise ConfigurationError(f"override key {key!r} needs the form section.field")
            tree.setdefault(section, {})[name] = value
        if "solver.radius_R" in overrides and "solver.periodization_radius" not in overrides:
            # recomputed as 2R
            tree["solver"]["periodization_radius"] = 0.0
        return validate_lab_config(tree)


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        loc = ".".join(str(p) for p in item.get("loc", ()))
        parts.append(f"{loc}: {item.get('msg')}" if loc else str(item.get("msg")))
    return "; ".join(parts)


def validate_lab_config(tree: Dict[str, Any]) -> LabConfig:
    try:
        return LabConfig.model_validate(tree)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {_describe(e)}") from e


def load_lab_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> LabConfig:
    """
    Load a TOML run configuration and apply CLI overrides.

    Args:
        path: TOML file; None gives the defaults
        overrides: Dotted-key values taking precedence over the file

    Returns:
        The validated configuration

    Raises:
        ConfigurationError: On unreadable files or schema violations
    """
    tree: Dict[str, Any] = {}
    if path:
        try:
            with open(path, "rb") as fh:
                tree = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigurationError(f"cannot read configuration {path}: {e}") from e
    config = validate_lab_config(tree)
    return config.with_overrides(overrides or {})
