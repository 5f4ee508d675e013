"""Exception hierarchy for the vsclab application."""

from typing import Optional


class VscLabError(Exception):
    """Base class for all errors raised by vsclab."""

    exit_code = 3


class ConfigurationError(VscLabError, ValueError):
    """Raised when a run configuration violates its schema."""

    exit_code = 2


class LatticeError(VscLabError, ValueError):
    """Raised for invalid lattice arguments or excluded exponents."""


class DomainViolationError(VscLabError, ValueError):
    """Raised when a contrast is required to lie in the admissible set but does not."""


class FormatError(VscLabError, ValueError):
    """Raised when a stored artifact fails header or length validation."""


class AdmissibilityError(VscLabError, ValueError):
    """Raised when a parameter violates an admissibility constraint."""


class CalibrationError(VscLabError):
    """Raised when a constant cannot be calibrated from the given cases."""


class ConvergenceError(VscLabError):
    """Raised when an iterative solver stops before reaching its tolerance."""

    def __init__(
        self,
        message: str,
        residual: float,
        iterations: int,
        symbol_min: Optional[float] = None,
    ):
        """
        Initialize the ConvergenceError.

        Args:
            message: Human readable description
            residual: Relative residual at the last iterate
            iterations: Number of iterations performed
            symbol_min: Smallest modulus of the inverted symbol, when relevant
        """
        details = f"{message} (residual={residual:.3e}, iterations={iterations}"
        if symbol_min is not None:
            details += f", symbol_min={symbol_min:.3e}"
        super().__init__(details + ")")
        self.residual = residual
        self.iterations = iterations
        self.symbol_min = symbol_min
