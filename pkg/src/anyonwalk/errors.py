"""Exception types shared across the package.

Grouping them here keeps the CLI's exit-code mapping in one place:
schema problems, size-guard violations and numerical invariant breaches
are distinct failure modes and must stay distinguishable.
"""

from __future__ import annotations

__all__ = [
    "SchemaError",
    "GuardLimitError",
    "NumericalInvariantError",
    "CalibrationError",
    "ConventionError",
    "InadmissiblePairError",
    "DegenerateNormalizationError",
    "BoundsInapplicableError",
]


class SchemaError(ValueError):
    """A run configuration failed schema validation."""


class GuardLimitError(ValueError):
    """An operation was asked to exceed a documented size guard."""


class NumericalInvariantError(ArithmeticError):
    """A numerical invariant was violated beyond tolerance.

    Carries a diagnostics mapping so callers (and the CLI) can dump the
    offending values instead of failing silently.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class CalibrationError(NumericalInvariantError):
    """No candidate bracket root passed the calibration targets."""


class ConventionError(NumericalInvariantError):
    """A sign or phase convention check failed (e.g. a trace residue
    that should be +-1 is not)."""


class InadmissiblePairError(ValueError):
    """A path pair does not satisfy the admissibility conditions."""


class DegenerateNormalizationError(ArithmeticError):
    """A correlator normalization is numerically zero."""


class BoundsInapplicableError(ValueError):
    """Closed-form localization-length bounds do not apply here."""
