"""
Exception hierarchy for mixture fitting.

Everything derives from ValueError so callers that only care about "bad input"
can keep catching ValueError. The CLI maps FitError to exit code 3 and every
other MixtureError to exit code 2.
"""

from __future__ import annotations

from typing import List, Sequence


class MixtureError(ValueError):
    """Base class for all errors raised by this package."""


# -----------------------------
# Usage / input side
# -----------------------------
class InvalidParameterError(MixtureError):
    pass


class DimensionMismatchError(MixtureError):
    pass


class DomainError(MixtureError):
    """Observation outside the support of the component family."""


class DataFormatError(MixtureError):
    """A data, model or spec file could not be parsed."""


class FamilyMismatchError(MixtureError):
    pass


# -----------------------------
# Numerical / fit side
# -----------------------------
class FitError(MixtureError):
    """Raised when fitting cannot proceed numerically."""


class NotPositiveDefiniteError(FitError):
    pass


class NonFiniteLikelihoodError(FitError):
    pass


class ZeroRangeError(FitError):
    pass


class DegenerateComponentError(FitError):
    """
    One or more components received (almost) no responsibility mass.
    """

    def __init__(self, components: Sequence[int], message: str | None = None) -> None:
        self.components: List[int] = list(components)
        super().__init__(message or f"Degenerate mixture components: {self.components}")
