"""Exception hierarchy shared by the library and the CLI.

The CLI maps ``ValidationError`` to exit code 1 and ``NumericalError`` to
exit code 2.
"""
from __future__ import annotations

from typing import Optional


class DcmdError(Exception):
    """Base class for every error raised by :mod:`dcmd`."""


class ValidationError(DcmdError, ValueError):
    """Invalid input: grid sizes, coefficients, boundary wiring, time steps."""

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key = key


class ScenarioParseError(ValidationError):
    """A scenario document or expression could not be parsed."""

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        key: Optional[str] = None,
    ) -> None:
        location = []
        if key:
            location.append(key)
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        text = f"{message} ({', '.join(location)})" if location else message
        super().__init__(text, key=key)
        self.line = line
        self.column = column


class NumericalError(DcmdError):
    """Base class for failures of the numerical machinery."""


class LinearSolveError(NumericalError):
    """A linear solve missed its residual contract or did not converge."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0) -> None:
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class SingularSystemError(LinearSolveError):
    """The system matrix is structurally or numerically singular."""


class SimulationError(NumericalError):
    """A closed-loop or transient run aborted."""

    def __init__(self, message: str, step: int, residual: float = float("nan")) -> None:
        super().__init__(f"step {step}: {message}")
        self.step = step
        self.residual = residual
