"""The degenerate Kloosterman Dirichlet series phi_plus(n, s) and its exact
closed form, plus the vanishing lemma for theta-multiplier sums.

phi_plus(n, s) = sum over 0 < c = 0 mod 4 of S_{1/2}^+(0, n, c) / c^{2s}
converges absolutely for Re s > 3/4 and evaluates, for n = w^2 d with d
fundamental, to

    2^{3/2 - 4s} w^{1 - 2s} L(2s - 1/2, chi_d) / zeta(4s - 1)
        * frak_S_d(w, 2s - 1).

Both sides are computed here and cross-checked against each other within a
rigorous truncation tail bound; the vanishing lemma gives residue classes
of (n, c) where every term S_theta(0, n, c) is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import AccuracyError, AdmissibilityError, DomainError
from .kloosterman import s_plus_fast, s_plus_value, s_theta_infinity
from .ntheory import WEIGHT_PLUS, FundDecomposition, Weight, dirichlet_L, frak_S, fund_decompose

# sigma_0(c) <= SIGMA0_CUBE_ROOT_CONST * c^(1/3) for every c >= 1: the
# per-prime maxima of (a+1) p^(-a/3) are 2 (p=2, a=3), 1.4423 (p=3, a=2),
# 1.1696 (p=5), 1.0458 (p=7), and below 1 for p >= 11; their product is
# under 3.53
SIGMA0_CUBE_ROOT_CONST = 3.53


@dataclass(frozen=True)
class PhiPlusQuery:
    """A phi_plus evaluation request: index n, spectral parameter s, and
    series cutoff X. The decomposition n = w^2 d (d fundamental) is
    computed on construction and drives the closed form."""

    n: int
    s: complex
    X: float
    decomposition: FundDecomposition = field(init=False)

    def __post_init__(self) -> None:
        if self.n <= 0 or self.n % 4 not in (0, 1):
            raise AdmissibilityError(
                f"phi_plus index must be positive with n = 0,1 mod 4, got {self.n}"
            )
        if complex(self.s).real <= 0.75:
            raise DomainError(
                f"phi_plus needs Re s > 3/4 for absolute convergence, got s = {self.s}"
            )
        if self.X <= 0:
            raise DomainError(f"cutoff X must be positive, got {self.X}")
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "decomposition", fund_decompose(self.n, WEIGHT_PLUS))


def phi_plus_series(q: PhiPlusQuery) -> complex:
    """Truncated Dirichlet series sum_{4 | c <= X} S_{1/2}^+(0, n, c) / c^{2s}.

    Terms are summed in ascending c (deterministic); X < 4 gives the empty
    sum 0. The truncation error is bounded by phi_plus_tail(q)."""
    total = 0j
    c = 4
    while c <= q.X:
        try:
            term = s_plus_fast(WEIGHT_PLUS, 0, q.n, c)
        except DomainError:
            term = s_plus_value(WEIGHT_PLUS, 0, q.n, c)
        if term:
            total += term * c ** (-2 * q.s)
        c += 4
    return complex(total)


def phi_plus_tail(q: PhiPlusQuery) -> float:
    """Rigorous closed-form bound on |phi_plus - phi_plus_series(X)|.

    From the Weil-type majorant |S^+(0,n,c)| <= 2 sigma_0(c) gcd(n,c)^{1/2}
    c^{1/2} and sigma_0(c) <= 3.53 c^{1/3}, each term is at most
    7.06 sqrt(n) c^{5/6 - 2 sigma}; comparing the sum over c = 4k > X with
    the integral of the decreasing majorant gives

        tail(X) <= (7.06 / 4) sqrt(n) X^{11/6 - 2 sigma} / (2 sigma - 11/6),

    valid for sigma = Re s > 11/12 (the crude sigma_0 power needs that
    margin; the series itself converges for Re s > 3/4)."""
    sigma = q.s.real
    exponent = 2 * sigma - 11 / 6
    if exponent <= 0:
        raise DomainError(
            "closed-form tail bound needs Re s > 11/12; "
            f"got Re s = {sigma} (series still converges for Re s > 3/4)"
        )
    X = max(q.X, 4.0)
    return (
        2 * SIGMA0_CUBE_ROOT_CONST / 4 * math.sqrt(q.n) * X ** (-exponent) / exponent
    )


def phi_plus_closed(n: int, s: complex) -> complex:
    """Exact evaluation 2^{3/2-4s} w^{1-2s} L(2s-1/2, chi_d) / zeta(4s-1)
    * frak_S_d(w, 2s-1), for n = w^2 d with d fundamental."""
    if n <= 0 or n % 4 not in (0, 1):
        raise AdmissibilityError(
            f"phi_plus index must be positive with n = 0,1 mod 4, got {n}"
        )
    s = complex(s)
    if s.real <= 0.75:
        raise DomainError(f"phi_plus needs Re s > 3/4, got s = {s}")
    dec = fund_decompose(n, WEIGHT_PLUS)
    d, w = dec.d, dec.w
    lval = dirichlet_L(d, 2 * s - 0.5)
    zval = dirichlet_L(1, 4 * s - 1)
    if abs(zval) < 1e-14:
        raise AccuracyError(f"zeta(4s-1) vanishes at s = {s}")
    return (
        2 ** (1.5 - 4 * s)
        * w ** (1 - 2 * s)
        * lval
        / zval
        * frak_S(d, w, 2 * s - 1)
    )


_LEMMA_TOL = 1e-10


def _in_vanishing_class(n: int, c: int) -> bool:
    return (n % 4 == 0 and c % 16 == 8) or (n % 4 == 1 and c % 16 == 0)


def vanishing_check(n: int, c: int, wt: Weight = WEIGHT_PLUS) -> bool:
    """True iff the theta-multiplier sum S(0, n, c) vanishes numerically.

    In the residue classes (n = 0 mod 4, c = 8 mod 16) and (n = 1 mod 4,
    c = 0 mod 16) the sum is exactly zero; a nonzero value there is an
    arithmetic fault and raises AccuracyError rather than returning
    False."""
    if c <= 0 or c % 4:
        raise AdmissibilityError(f"vanishing_check requires 4 | c > 0, got {c}")
    value = s_theta_infinity(0, n, c, wt)
    vanishes = abs(value) < _LEMMA_TOL
    if _in_vanishing_class(n, c) and not vanishes:
        raise AccuracyError(
            f"S(0,{n},{c}) = {value} must vanish in its residue class"
        )
    return vanishes


def verification_report(
    n_values: list[int] | tuple[int, ...] = (5, 8, 13, 45),
    s_values: list[complex] | tuple[complex, ...] = (1.25, 1.5),
    X: float = 1e5,
) -> dict:
    """Series-vs-closed-form cross-check over a grid, as a JSON-ready dict.

    Each row records the query, both values, their absolute difference,
    the rigorous tail bound at the cutoff, and whether the difference is
    within the bound; all_pass aggregates the rows."""
    rows = []
    all_pass = True
    for n in n_values:
        for s in s_values:
            q = PhiPlusQuery(n=n, s=s, X=X)
            series = phi_plus_series(q)
            closed = phi_plus_closed(n, s)
            tail = phi_plus_tail(q)
            diff = abs(series - closed)
            ok = diff <= tail
            all_pass = all_pass and ok
            rows.append(
                {
                    "n": n,
                    "s_re": complex(s).real,
                    "s_im": complex(s).imag,
                    "X": float(X),
                    "series_re": series.real,
                    "series_im": series.imag,
                    "closed_re": closed.real,
                    "closed_im": closed.imag,
                    "abs_diff": diff,
                    "tail_bound": tail,
                    "pass": ok,
                }
            )
    return {"check": "phi_plus_series_vs_closed", "rows": rows, "all_pass": all_pass}
