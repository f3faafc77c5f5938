"""Computational toolkit for half-integral-weight Kloosterman sums in the
Kohnen plus space, quadratic Weyl sums twisted by genus characters, and the
traces of the modular functions j_m over CM points, closed geodesics, and
regularized hyperbolic surfaces.

Subpackage layout mirrors the mathematical layers:

- ``ntheory``: exact elementary arithmetic (Kronecker symbols, discriminant
  decompositions, divisor sums, Dirichlet L-values).
- ``quadforms``: binary quadratic forms, Zagier-reduced cycles, automorphs,
  genus characters.
- ``kloosterman``: plus-space Kloosterman sums, theta-multiplier cusp sums,
  Weyl sums, Kohnen's identity, streaming partial sums.
- ``modforms``: exact q-expansions of j, Faber polynomials, fundamental-domain
  reduction, CM traces.
- ``geodesics``: cycle integrals, winding numbers, surface masses, and the
  Kloosterman-series evaluations of both traces.
- ``spectral``: the Dirichlet series phi^+(n,s), its closed form, and the
  vanishing lemma for theta-multiplier sums.
- ``cli``: batch command-line surface over all of the above, with
  ``report`` (deterministic CSV/JSON artifacts) and ``plots`` (optional
  figure rendering) underneath.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    AdmissibilityError,
    DegeneratePositionError,
    DomainError,
    ModeError,
    ResourceError,
    SearchError,
)

__all__ = [
    "__version__",
    "AccuracyError",
    "AdmissibilityError",
    "DegeneratePositionError",
    "DomainError",
    "ModeError",
    "ResourceError",
    "SearchError",
]
