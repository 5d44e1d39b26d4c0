from dataclasses import dataclass
from typing import List


@dataclass(frozen=True)
class Violation:
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


class ConfigError(ValueError):
    """One or more configuration fields failed validation."""

    exit_code = 2

    def __init__(self, violations: List[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class DomainError(ValueError):
    exit_code = 2


class NoCrossingError(DomainError):
    exit_code = 3


class InfeasibleError(RuntimeError):
    exit_code = 3


class ValidationFailed(RuntimeError):
    exit_code = 4
