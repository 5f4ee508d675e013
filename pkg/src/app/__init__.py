"""Run orchestration for the vsclab command line."""

from .app_manager import SUBCOMMANDS, LabManager

__all__ = ["LabManager", "SUBCOMMANDS"]
