"""Exact elementary arithmetic: extended Kronecker symbols, the factors
eps_d, fundamental-discriminant decompositions, divisor sums, the twisted
divisor sum frak_S, and numerical Dirichlet L-values.

Everything here is pure and reentrant; integer results are exact, and the
only floating-point operation is the L-value evaluator, which works through
mpmath's Hurwitz zeta at a precision derived from the requested tolerance.

Kronecker symbol conventions at nonpositive bottom argument (one table):

    (a / -1) = 1 if a >= 0, -1 if a < 0
    (a /  0) = 1 if a = +-1, else 0
    (a /  2) = 0 if a even; +1 if a = +-1 mod 8; -1 if a = +-3 mod 8
    (a /  n) for odd prime n: the Legendre symbol
    completely multiplicative in the bottom argument

These make genus characters (d/n) constant on the values represented by a
form class, including negative represented values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import mpmath

from .errors import AccuracyError, AdmissibilityError, DomainError, ResourceError

FACTOR_LIMIT = 10**8


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class Weight:
    """Half-integral weight k = lambda + 1/2 with lambda in {0, -1}.

    Only k = +1/2 and k = -1/2 are constructible; lam is derived so the
    relation k = lam + 1/2 holds by construction.
    """

    k: Fraction

    def __post_init__(self) -> None:
        if self.k not in (Fraction(1, 2), Fraction(-1, 2)):
            raise AdmissibilityError(f"weight k must be +1/2 or -1/2, got {self.k}")

    @property
    def lam(self) -> int:
        return int(self.k - Fraction(1, 2))

    @property
    def sign(self) -> int:
        """(-1)^lam: +1 for k = 1/2, -1 for k = -1/2."""
        return 1 if self.lam % 2 == 0 else -1

    @classmethod
    def from_value(cls, value: float | Fraction | str) -> "Weight":
        """Accept 0.5 / -0.5 / '1/2' / '-1/2' style inputs."""
        if isinstance(value, str):
            value = Fraction(value)
        return cls(Fraction(value).limit_denominator(2))


WEIGHT_PLUS = Weight(Fraction(1, 2))
WEIGHT_MINUS = Weight(Fraction(-1, 2))


@dataclass(frozen=True)
class FundDecomposition:
    """Decomposition (-1)^lam * n = w^2 * d with d a fundamental discriminant."""

    n: int
    sign_weight: Weight
    d: int
    w: int

    def __post_init__(self) -> None:
        if self.n <= 0 or self.w <= 0:
            raise AdmissibilityError("n and w must be positive")
        if self.sign_weight.sign * self.n != self.w * self.w * self.d:
            raise AdmissibilityError("decomposition does not reconstruct (-1)^lam * n")
        if not is_fundamental(self.d):
            raise AdmissibilityError(f"{self.d} is not a fundamental discriminant")


_SPECIAL_KINDS = frozenset(
    {"sigma_s", "tau_s", "frakS", "moebius", "kronecker", "eps", "dirichletL", "zeta", "delta_d"}
)


@dataclass(frozen=True)
class SpecialValue:
    """Typed record of one special-value computation (kind, arguments, value)."""

    kind: str
    args: tuple
    value: complex

    def __post_init__(self) -> None:
        if self.kind not in _SPECIAL_KINDS:
            raise DomainError(f"unknown special value kind {self.kind!r}")
        if self.kind in ("moebius", "kronecker") and self.value not in (-1, 0, 1):
            raise DomainError(f"{self.kind} value must be in {{-1,0,1}}")
        if self.kind == "eps" and self.value not in (1, 1j):
            raise DomainError("eps value must be 1 or i")


def special_value(kind: str, *args) -> SpecialValue:
    """Compute a SpecialValue record by dispatching on kind."""
    dispatch = {
        "sigma_s": lambda n, s: divisor_power_sum(n, s),
        "tau_s": lambda n, s: divisor_power_sum(n, s, normalized=True),
        "frakS": lambda d, w, s: frak_S(d, w, s),
        "moebius": lambda n: moebius(n),
        "kronecker": lambda a, n: kronecker(a, n),
        "eps": lambda d: eps_factor(d),
        "dirichletL": lambda d, s: dirichlet_L(d, s),
        "zeta": lambda s: dirichlet_L(1, s),
        "delta_d": lambda d: delta_d(d),
    }
    return SpecialValue(kind=kind, args=tuple(args), value=dispatch[kind](*args))


# ---------------------------------------------------------------------------
# Kronecker symbol and eps factor


def kronecker(a: int, n: int) -> int:
    """Extended Kronecker symbol (a/n), total on all integer pairs.

    Completely multiplicative in n; agrees with the Legendre symbol for odd
    prime n; zero iff gcd(a, n) > 1. Conventions at n <= 0 per the module
    docstring table.
    """
    if n == 0:
        return 1 if a in (1, -1) else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    if n % 2 == 0:
        if a % 2 == 0:
            return 0
        t = 0
        while n % 2 == 0:
            n //= 2
            t += 1
        if t % 2 == 1 and a % 8 in (3, 5):
            result = -result
    # n is now odd and positive: Jacobi symbol via reciprocity.
    a %= n
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def eps_factor(d: int) -> complex:
    """eps_d = 1 if d = 1 mod 4, i if d = 3 mod 4; satisfies eps_d^2 = (-1/d)."""
    if d % 2 == 0:
        raise AdmissibilityError(f"eps_factor requires odd d, got {d}")
    return 1 + 0j if d % 4 == 1 else 1j


def delta_d(d: int) -> int:
    """Indicator of the trivial factor: 1 if d = 1 else 0 (weights main terms)."""
    return 1 if d == 1 else 0


# ---------------------------------------------------------------------------
# Factorization (deterministic wheel trial division, desk-scale inputs)

_WHEEL_INC = (4, 2, 4, 2, 4, 6, 2, 6)  # gaps between 7,11,13,17,19,23,29,31 (+30)


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of |n| as {p: exponent}, for 1 <= |n| <= 10^8."""
    n = abs(n)
    if n == 0:
        raise DomainError("cannot factor 0")
    if n > FACTOR_LIMIT:
        raise ResourceError(f"factorization limited to inputs <= {FACTOR_LIMIT}, got {n}")
    out: dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    p, i = 7, 0
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += _WHEEL_INC[i]
        i = (i + 1) % 8
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def moebius(n: int) -> int:
    """Moebius function of n >= 1."""
    if n < 1:
        raise DomainError("moebius requires n >= 1")
    fac = factorize(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


def divisors(n: int) -> list[int]:
    """Sorted positive divisors of |n| >= 1."""
    out = [1]
    for p, e in factorize(n).items():
        out = [d * p**j for d in out for j in range(e + 1)]
    return sorted(out)


def euler_phi(n: int) -> int:
    """Euler totient of n >= 1."""
    result = n
    for p in factorize(n):
        result = result // p * (p - 1)
    return result


def is_fundamental(d: int) -> bool:
    """Fundamental discriminant test: d = 1 mod 4 squarefree (including 1),
    or d = 4m with m squarefree and m = 2,3 mod 4."""
    if d == 0:
        return False
    if d % 4 == 1:
        return all(e == 1 for e in factorize(d).values())
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and all(e == 1 for e in factorize(m).values())
    return False


def fund_decompose(n: int, wt: Weight) -> FundDecomposition:
    """Unique decomposition (-1)^lam * n = w^2 * d with d fundamental, n > 0."""
    if n <= 0:
        raise AdmissibilityError("fund_decompose requires positive n")
    signed = wt.sign * n
    if signed % 4 not in (0, 1):
        raise AdmissibilityError(
            f"(-1)^lam * n = {signed} is 2,3 mod 4: outside the plus space"
        )
    core = 1
    for p, e in factorize(signed).items():
        if e % 2:
            core *= p
    d0 = core if signed > 0 else -core
    if d0 % 4 == 1:
        d = d0
    else:
        d = 4 * d0
    w = math.isqrt(signed // d)
    if w * w * d != signed:
        raise AdmissibilityError(f"internal decomposition failure for n={n}")
    return FundDecomposition(n=n, sign_weight=wt, d=d, w=w)


# ---------------------------------------------------------------------------
# Divisor sums


def sigma_int(n: int, k: int = 1) -> int:
    """Exact integer sigma_k(n) = sum of d^k over divisors (k >= 0)."""
    if n < 1 or k < 0:
        raise DomainError("sigma_int requires n >= 1, k >= 0")
    return sum(d**k for d in divisors(n))


def divisor_power_sum(n: int, s: complex, normalized: bool = False) -> complex:
    """sigma_s(n) = sum over divisors l of l^s, or the normalized
    tau_s(n) = sigma_{2s}(n)/n^s when normalized=True."""
    if n < 1:
        raise DomainError("divisor_power_sum requires n >= 1")
    s = complex(s)
    if normalized:
        return sum(complex(d) ** (2 * s) for d in divisors(n)) / complex(n) ** s
    return sum(complex(d) ** s for d in divisors(n))


def ramanujan_sum(q: int, w: int) -> int:
    """Ramanujan sum c_q(w) = sum of e(xw/q) over x mod q coprime to q,
    via the Hoelder evaluation mu(q/g) * phi(q) / phi(q/g), g = gcd(q, w)."""
    if q < 1:
        raise DomainError("ramanujan_sum requires q >= 1")
    g = math.gcd(q, w)
    qg = q // g
    mu = moebius(qg)
    if mu == 0:
        return 0
    return mu * euler_phi(q) // euler_phi(qg)


def frak_S(d: int, w: int, s: complex) -> complex:
    """frak_S_d(w, s) = sum over l | w of mu(l) (d/l) tau_s(w/l) / sqrt(l),
    with the principal real square root of l.

    Satisfies |frak_S_d(w, it)| <= sigma_0(w)^2 for real t.
    """
    if not is_fundamental(d):
        raise AdmissibilityError(f"frak_S requires fundamental d, got {d}")
    if w < 1:
        raise DomainError("frak_S requires w >= 1")
    total = 0j
    for ell in divisors(w):
        mu = moebius(ell)
        if mu == 0:
            continue
        total += (
            mu
            * kronecker(d, ell)
            * divisor_power_sum(w // ell, s, normalized=True)
            / math.sqrt(ell)
        )
    return total


# ---------------------------------------------------------------------------
# Dirichlet L-values


_MAX_DPS = 80


def dirichlet_L(d: int, s: complex, tol: float = 1e-12) -> complex:
    """L(s, chi_d) for fundamental d, Re s > 1/2, within tol.

    d = 1 yields the Riemann zeta function. Evaluation decomposes the
    character sum over residues a mod |d| into Hurwitz zeta values
    |d|^-s * sum_a chi_d(a) zeta(s, a/|d|), which converges throughout the
    half-plane and in particular near the critical strip; plain Dirichlet
    summation is never used for Re s <= 1.
    """
    if not is_fundamental(d):
        raise AdmissibilityError(f"dirichlet_L requires fundamental d, got {d}")
    s = complex(s)
    if s.real <= 0.5:
        raise DomainError("dirichlet_L requires Re s > 1/2")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if d == 1 and s == 1:
        raise DomainError("zeta has a pole at s = 1")
    dps = max(20, int(-math.log10(tol)) + 10)
    if dps > _MAX_DPS:
        raise AccuracyError(f"tolerance {tol} requires dps > {_MAX_DPS}")
    with mpmath.workdps(dps):
        if d == 1:
            value = mpmath.zeta(s)
        else:
            q = abs(d)
            acc = mpmath.mpc(0)
            if s == 1:
                # zeta(s, x) has a pole at s=1 that cancels in the character
                # sum (sum of chi is 0); the finite part of zeta(s,x) there is
                # -digamma(x), so L(1, chi) = -q^{-1} sum chi(a) psi(a/q).
                for a in range(1, q + 1):
                    chi = kronecker(d, a)
                    if chi:
                        acc -= chi * mpmath.digamma(mpmath.mpf(a) / q)
                value = acc / q
            else:
                for a in range(1, q + 1):
                    chi = kronecker(d, a)
                    if chi:
                        acc += chi * mpmath.zeta(s, mpmath.mpf(a) / q)
                value = acc * mpmath.power(q, -s)
        return complex(value)


# ---------------------------------------------------------------------------
# Shared small utilities used by sibling modules


def is_discriminant(n: int) -> bool:
    """n = 0,1 mod 4 (the residues a discriminant b^2 - 4ac can take)."""
    return n % 4 in (0, 1)


def squarefree_part(n: int) -> int:
    """Largest squarefree divisor carrying the odd-exponent primes of |n|, signed."""
    if n == 0:
        raise DomainError("0 has no squarefree part")
    core = 1
    for p, e in factorize(n).items():
        if e % 2:
            core *= p
    return core if n > 0 else -core


def prime_range(limit: int) -> list[int]:
    """Primes <= limit by sieve."""
    if limit < 2:
        return []
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = b"\x00" * len(range(p * p, limit + 1, p))
    return [i for i, flag in enumerate(sieve) if flag]


def fundamental_discriminants(lo: int, hi: int) -> Iterator[int]:
    """Fundamental discriminants d with lo <= d <= hi, ascending."""
    for d in range(lo, hi + 1):
        if d != 0 and d % 4 in (0, 1) and is_fundamental(d):
            yield d
