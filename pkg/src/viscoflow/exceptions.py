"""Error types shared by all services"""

from dataclasses import dataclass
from typing import List, Optional


class ViscoflowError(Exception):
    """Base class for every error raised by the package."""


class DomainError(ViscoflowError, ValueError):
    """A field value lies outside the domain of a physical relation (e.g. rho <= 0)."""


class MaterialLawError(ViscoflowError):
    def __init__(self, coefficient: str, value: float, message: str = ""):
        self.coefficient = coefficient
        self.value = value
        super().__init__(message or f"transport coefficient {coefficient} evaluated to {value!r}")


class AssemblyError(ViscoflowError):
    """State point is not admissible for the quasilinear system."""


@dataclass(frozen=True)
class ConfigIssue:
    line: Optional[int]
    key: str
    message: str

    def __str__(self) -> str:
        where = f"line {self.line}" if self.line is not None else "config"
        return f"{where}: {self.key}: {self.message}"


class ConfigError(ViscoflowError):
    def __init__(self, issues: List[ConfigIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class CertificateRefused(ViscoflowError):
    """Breakdown-theorem hypotheses cannot be evaluated for this scenario."""


class InsufficientData(ViscoflowError):
    pass


class FitError(ViscoflowError):
    def __init__(self, message: str, residual: float, report: str = ""):
        self.residual = residual
        self.report = report
        super().__init__(f"{message} (relative residual {residual:.3e})")


class NumericalFailure(ViscoflowError):
    """Unexpected non-finite arithmetic inside the solver."""
