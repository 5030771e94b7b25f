"""
PHFRACTAL Error Hierarchy
=========================
Every failure a run can report maps to one exception class; the class carries
the process exit code the CLI returns for it.
"""

from typing import Any, Optional


class PhFractalError(Exception):
    exit_code = 1


class ArgumentError(PhFractalError, ValueError):
    """Invalid argument or configuration; nothing was computed."""
    exit_code = 2


class UnsupportedStructureError(ArgumentError):
    """The closed form does not apply to this family structure."""


class EstimationError(PhFractalError, ValueError):
    exit_code = 2


class StepRangeError(PhFractalError, OverflowError):
    exit_code = 2


class ConvergenceError(PhFractalError):
    """The sequence method hit j_max. Carries the trace (and a partial report when raised by euler)."""
    exit_code = 3

    def __init__(self, message: str, trace: Any = None, report: Optional[Any] = None):
        super().__init__(message)
        self.trace = trace
        self.report = report


class ResourceError(PhFractalError, MemoryError):
    exit_code = 4


class MatchFailure(PhFractalError):
    exit_code = 5

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class InapplicableError(PhFractalError):
    """The Llorente-Winter integral is undefined: the spec has bars with positive birth."""
    exit_code = 6


class ContractViolation(PhFractalError, RuntimeError):
    exit_code = 1
