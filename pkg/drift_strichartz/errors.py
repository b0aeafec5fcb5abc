"""
Exception hierarchy for the drift-Strichartz toolkit.
Every error carries the process exit code the CLI reports for it.
"""

from typing import Any, Dict, List, Optional, Sequence


class DriftStrichartzError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class DimensionError(DriftStrichartzError):
    """Matrix or field shapes do not fit together."""


class DomainError(DriftStrichartzError):
    """An argument lies outside the range where the operation is defined."""


class ProblemFileError(DriftStrichartzError):
    """A problem file could not be parsed into an operator specification."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.detail = message
        self.field = field
        self.line = line


class RegistryError(DriftStrichartzError):
    """Unknown fixture name or fixture parameters out of range."""


class NumericalError(DriftStrichartzError):
    """An eigensolver or linear solve failed to converge."""


class HoermanderError(DriftStrichartzError):
    """Condition (H) fails: Ker Q contains a nontrivial B^T-invariant subspace."""

    exit_code = 2

    def __init__(self, message: str, profile: Optional[Sequence[int]] = None):
        super().__init__(message)
        self.profile = list(profile or [])


class DegenerateGramianError(DriftStrichartzError):
    """Q(t) is not positive definite to working precision."""

    exit_code = 2

    def __init__(self, t: float, detail: str = ""):
        message = f"Gramian Q(t) is not positive definite at t={t:.6g}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.t = t


class ConsistencyError(DriftStrichartzError):
    """Two independent numerical tests disagree."""

    exit_code = 2


class CanonicalFormError(DriftStrichartzError):
    """Krylov rank increments are not a valid canonical rank sequence."""

    exit_code = 2

    def __init__(self, message: str, increments: Optional[Sequence[int]] = None):
        super().__init__(message)
        self.increments = list(increments or [])


class InconclusiveRegimeError(DriftStrichartzError):
    """The large-time growth fit is too noisy to decide between the anomalous regimes."""

    exit_code = 3

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class GeometryError(DriftStrichartzError):
    """The drift flow pushes the support of the data out of the periodic box."""

    exit_code = 4

    def __init__(self, message: str, corner: Optional[List[float]] = None, t: Optional[float] = None):
        super().__init__(message)
        self.corner = corner
        self.t = t


class ResolutionError(DriftStrichartzError):
    """The lattice cannot resolve the frequencies or the chirp phase at this time."""

    exit_code = 4

    def __init__(self, message: str, axis: Optional[int] = None, measured: Optional[float] = None,
                 limit: Optional[float] = None, t: Optional[float] = None):
        super().__init__(message)
        self.axis = axis
        self.measured = measured
        self.limit = limit
        self.t = t


class SuiteFailure(DriftStrichartzError):
    """A verification suite ran to completion but one of its checks failed."""

    exit_code = 5


__all__ = [
    "DriftStrichartzError",
    "DimensionError",
    "DomainError",
    "ProblemFileError",
    "RegistryError",
    "NumericalError",
    "HoermanderError",
    "DegenerateGramianError",
    "ConsistencyError",
    "CanonicalFormError",
    "InconclusiveRegimeError",
    "GeometryError",
    "ResolutionError",
    "SuiteFailure",
]
