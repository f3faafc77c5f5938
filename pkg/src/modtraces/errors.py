"""Error taxonomy shared across the package.

Validation failures (bad arguments, inadmissible queries) derive from
ValueError; computation failures (budgets, precision, searches) derive from
ArithmeticError. The CLI maps the former to exit code 2 and the latter to 1.
"""

from __future__ import annotations


class AdmissibilityError(ValueError):
    """Query violates a plus-space or discriminant admissibility condition."""


class DomainError(ValueError):
    """Arguments lie outside an operation's mathematical domain (e.g. a pole)."""


class ResourceError(ValueError):
    """A configured cap (truncation, series length, factorization size) was exceeded."""


class AccuracyError(ArithmeticError):
    """Requested tolerance unreachable within the configured budget."""


class ModeError(ArithmeticError):
    """Precision budget of the selected mode exceeded (e.g. double where extended is needed)."""


class SearchError(ArithmeticError):
    """A bounded search (e.g. for a coprime represented value) was exhausted."""


class DegeneratePositionError(ArithmeticError):
    """Evaluation point lies on a discontinuity locus; caller should jitter and retry."""
