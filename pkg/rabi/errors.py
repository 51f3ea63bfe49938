"""
Exception hierarchy for the toolkit.
Every error carries a human-readable detail and the process exit code the CLI maps it to.
"""
from typing import Optional

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class RabiError(Exception):
    """Base error: detail message plus CLI exit code"""

    exit_code: int = EXIT_VERIFY

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


# Input and configuration
class InputError(RabiError):
    exit_code = EXIT_CONFIG


class UnboundedSpectrum(InputError):
    pass


class NonPositiveFrequency(InputError):
    pass


class TruncationTooSmall(InputError):
    pass


class RangeTooNarrow(InputError):
    pass


class DomainError(InputError):
    pass


class DivisionByZeroG2(InputError):
    pass


class ParseError(InputError):
    def __init__(self, detail: str, line: Optional[int] = None):
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line


class ConfigValidationError(InputError):
    pass


class IoError(InputError):
    pass


# Solver
class SolverError(RabiError):
    exit_code = EXIT_SOLVER


class NoConvergence(SolverError):
    pass


class TruncationCeiling(SolverError):
    pass


class OverflowGuard(SolverError):
    pass


class SolverBudgetExceeded(SolverError):
    pass


# Analysis outcomes
class NoCompetition(RabiError):
    pass


class NotFound(RabiError):
    pass


class DegenerateAmbiguity(RabiError):
    pass


class VerificationFailed(RabiError):
    pass
