"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "WeakmeterError",
    "SignatureError",
    "DegeneratePostselectionError",
    "AnnihilationError",
    "IllConditionedFitError",
    "ScenarioError",
    "ScenarioSyntaxError",
    "UnknownIdError",
    "UnknownKeyError",
    "ParameterRangeError",
]


class WeakmeterError(ValueError):
    """Base class for all package-specific errors."""


class SignatureError(WeakmeterError):
    """Tensor-factor labels conflict or do not match."""


class DegeneratePostselectionError(WeakmeterError):
    """Pre- and post-selected states are (numerically) orthogonal.

    Weak values diverge as the overlap vanishes, so they are not reported
    below the overlap threshold.  ``overlap_abs`` carries |<post|pre>| scaled
    by the state norms.
    """

    def __init__(self, message: str, overlap_abs: float):
        super().__init__(message)
        self.overlap_abs = float(overlap_abs)


class AnnihilationError(WeakmeterError):
    """Post-selection annihilated the state (zero result)."""


class IllConditionedFitError(WeakmeterError):
    """Pointer fit has no usable spread across the grid."""


class ScenarioError(WeakmeterError):
    """Base class for scenario-file problems."""


class ScenarioSyntaxError(ScenarioError):
    """Malformed scenario text; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class UnknownIdError(ScenarioError):
    """A state or observable id is not in the catalog."""


class UnknownKeyError(ScenarioError):
    """A scenario document contains a key outside the schema (strict mode)."""


class ParameterRangeError(ScenarioError):
    """A scenario parameter is outside its allowed range."""
