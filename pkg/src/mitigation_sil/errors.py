"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations

from dataclasses import dataclass


class MitigationSilError(Exception):
    """Base class for all errors raised by this package."""


# -- scenario structure ------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    """One violated invariant found while validating a scenario."""

    code: str
    message: str
    path: str = ""

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        return f"{self.code}{where}: {self.message}"


class ScenarioValidationError(MitigationSilError, ValueError):
    """Raised with the complete list of violated invariants."""

    def __init__(self, issues: list[Issue]):
        self.issues = list(issues)
        lines = "\n".join(f"  - {issue}" for issue in self.issues)
        super().__init__(f"{len(self.issues)} scenario violation(s):\n{lines}")

    @property
    def codes(self) -> set[str]:
        return {issue.code for issue in self.issues}


class UnknownFunctionError(MitigationSilError, KeyError):
    pass


class InvalidModelError(MitigationSilError, ValueError):
    pass


# -- parsing -----------------------------------------------------------------


class ScenarioParseError(MitigationSilError, ValueError):
    pass


class ScenarioSyntaxError(ScenarioParseError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class MissingFieldError(ScenarioParseError):
    pass


class UnknownModelKindError(ScenarioParseError):
    pass


# -- expectation / sampling --------------------------------------------------


class PmfNotNormalizedError(MitigationSilError, ValueError):
    pass


class DensityNotNormalizedError(MitigationSilError, ValueError):
    pass


class QuadratureNonConvergenceError(MitigationSilError, ArithmeticError):
    pass


class SamplingUnsupportedError(MitigationSilError, ValueError):
    pass


# -- risk --------------------------------------------------------------------


class MissingEstimatedFrequencyError(MitigationSilError, ValueError):
    pass


class NoToleranceSourceError(MitigationSilError, ValueError):
    pass


class DivisionByZeroFrequencyError(MitigationSilError, ZeroDivisionError):
    pass


class UnknownCategoryError(MitigationSilError, KeyError):
    pass


# -- allocation --------------------------------------------------------------


class InfeasibleTargetError(MitigationSilError, ValueError):
    pass


class RatioDegenerateError(MitigationSilError, ValueError):
    pass


class ZeroToleranceRiskError(MitigationSilError, ValueError):
    pass


class NonPositiveRrfError(MitigationSilError, ValueError):
    pass
