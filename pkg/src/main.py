"""Main entry point for the vsclab command line."""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import structlog
from structlog.stdlib import LoggerFactory

# Add the project root to sys.path
project_root = str(Path(__file__).parent.parent)
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from src.app.app_manager import SUBCOMMANDS, LabManager
from src.config import Config as AppConfig
from src.config import get_config, load_lab_config
from src.core.errors import ConfigurationError
from src.db import get_cache


logger = structlog.get_logger()

shared_processors = [
    structlog.contextvars.merge_contextvars,
    structlog.processors.add_log_level,
    structlog.processors.TimeStamper(fmt="iso"),
]


def configure_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """
    Route structlog through stdlib logging with a console and an optional JSON file handler.

    Args:
        level: Root log level name
        log_file: Path of the JSON log file; None logs to the console only
    """
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(
        structlog.stdlib.ProcessorFormatter(
            processor=structlog.dev.ConsoleRenderer(),
            foreign_pre_chain=shared_processors,
        )
    )
    handlers: List[logging.Handler] = [console_handler]

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(
            structlog.stdlib.ProcessorFormatter(
                processor=structlog.processors.JSONRenderer(),
                foreign_pre_chain=shared_processors,
            )
        )
        handlers.append(file_handler)

    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format="%(message)s", handlers=handlers, force=True)

    structlog.configure(
        processors=shared_processors + [
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    """Parser with the subcommand and every global and module flag."""
    parser = argparse.ArgumentParser(
        prog="vsclab",
        description="Numerical laboratory for stability and convergence rates of inverse medium scattering",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS, help="Experiment to run")

    run_group = parser.add_argument_group("Run options")
    run_group.add_argument("--config", type=str, help="TOML run configuration")
    run_group.add_argument("--output", type=str, help="Output root, a directory or fsspec URL")
    run_group.add_argument("--jobs", type=int, help="Worker threads for independent solves")
    run_group.add_argument("--seed", type=int, help="Base seed of noise and random fields")
    run_group.add_argument("--log-level", type=str, choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Log level")

    solver_group = parser.add_argument_group("Forward solver")
    solver_group.add_argument("--grid", type=int, help="Voxels per axis of the solver grid")
    solver_group.add_argument("--kappa", type=float, help="Wavenumber")
    solver_group.add_argument("--radius-R", dest="radius_R", type=float, help="Measurement radius R > pi")
    solver_group.add_argument("--n-sources", type=int, help="Near-field source count")
    solver_group.add_argument("--n-dirs", type=int, help="Far-field direction count")
    solver_group.add_argument("--tol", type=float, help="Krylov relative tolerance")
    solver_group.add_argument("--kind", type=str, choices=["near", "far"], help="Data kind")
    solver_group.add_argument("--field", type=str, help="Binary contrast file used as the true contrast")

    gos_group = parser.add_argument_group("Geometrical-optics checks")
    gos_group.add_argument("--t-min", type=float, help="Smallest t of the sweep")
    gos_group.add_argument("--t-max", type=float, help="Largest t of the sweep")
    gos_group.add_argument("--n-t", type=int, help="Number of t values")
    gos_group.add_argument("--gamma-max", type=int, help="Largest |gamma_i| of the coefficient checks")

    reg_group = parser.add_argument_group("Regularization and source conditions")
    reg_group.add_argument("--deltas", type=_float_list, help="Comma-separated noise levels")
    reg_group.add_argument("--A", dest="A", type=float, help="Constant of the near-field index function")
    reg_group.add_argument("--mu", type=float, help="Exponent mu of the index function")
    reg_group.add_argument("--theta", type=float, help="Exponent theta of the far-field index function")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted configuration keys for every flag given on the command line."""
    overrides = {
        "run.output": args.output,
        "run.jobs": args.jobs,
        "run.seed": args.seed,
        "run.log_level": args.log_level,
        "solver.grid_size": args.grid,
        "solver.kappa": args.kappa,
        "solver.radius_R": args.radius_R,
        "solver.tolerance": args.tol,
        "data.n_sources": args.n_sources,
        "data.n_dirs": args.n_dirs,
        "data.kind": args.kind,
        "gos.t_min": args.t_min,
        "gos.t_max": args.t_max,
        "gos.n_t": args.n_t,
        "gos.gamma_max": args.gamma_max,
        "sweep.deltas": args.deltas,
        "psi.A": args.A,
        "psi.mu": args.mu,
        "psi.theta": args.theta,
    }
    if args.field:
        overrides["data.phantom"] = "file"
        overrides["data.field_path"] = args.field
    return {k: v for k, v in overrides.items() if v is not None}


async def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: Command line without the program name; sys.argv when None

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    env = get_config()
    env_defaults = {"run.output": env["output_root"], "run.jobs": env["jobs"], "run.log_level": env["logging_level"]}

    try:
        config = load_lab_config(args.config)
        if not args.config:
            config = config.with_overrides(env_defaults)
        config = config.with_overrides(overrides_from_args(args))
    except ConfigurationError as e:
        configure_logging(env["logging_level"], env["log_file"] or None)
        logger.error(f"Configuration rejected: {e}")
        return e.exit_code

    AppConfig.update({"logging_level": config.run.log_level})
    configure_logging(config.run.log_level, env["log_file"] or None)

    cache = get_cache()
    manager = LabManager(config, cache=cache)
    try:
        return await manager.run(args.subcommand)
    finally:
        manager.close()
        if cache is not None:
            cache.close()


def run() -> None:
    """Console-script entry point."""
    try:
        sys.exit(asyncio.run(main()))
    except KeyboardInterrupt:
        print("\nShutdown requested by keyboard interrupt")
        sys.exit(130)


if __name__ == "__main__":
    run()
