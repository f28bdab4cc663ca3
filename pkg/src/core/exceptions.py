"""
Exception hierarchy shared by every qnet module.
Each failure mode maps onto one CLI exit code (see scripts/qnetctl.py).
"""

from typing import Any, Optional


class QNetException(Exception):
    """Base exception for all qnet errors."""
    pass


class InvalidParameters(QNetException, ValueError):
    """A value violates a type invariant or a function domain."""
    pass


class DegenerateDenominator(InvalidParameters):
    """Decoy denominators vanish (mu_y == mu_x or mu_x == 0)."""
    pass


class InfeasibleBounds(QNetException):
    """
    Finite-key estimation hit a guard that means "no key".

    This is a result, not a crash: the partially filled trace is kept on
    ``partial`` so callers can still emit an R = 0 report.
    """

    def __init__(self, guard: str, partial: Optional[Any] = None):
        super().__init__(f"Infeasible bounds: {guard}")
        self.guard = guard
        self.partial = partial


class ConstraintViolation(QNetException):
    """Switch-port accounting exceeded."""

    def __init__(self, ports_used: int, switch_ports: int, strict: bool):
        relation = "<" if strict else "<="
        super().__init__(
            f"Port constraint violated: {ports_used} used, "
            f"require {relation} {switch_ports}"
        )
        self.ports_used = ports_used
        self.switch_ports = switch_ports
        self.strict = strict


class InfeasibleEverywhere(QNetException):
    """No evaluated operating point yields a positive key rate."""
    pass


class InputFormatError(QNetException):
    """Malformed input file, with position information where available."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        field: Optional[str] = None
    ):
        location = []
        if path:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.path = path
        self.line = line
        self.column = column
        self.field = field
