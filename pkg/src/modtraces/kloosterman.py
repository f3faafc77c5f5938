"""Plus-space Kloosterman sums S_k^+(m,n,c) for k = +-1/2, theta-multiplier
cusp sums, quadratic Weyl sums T_m twisted by genus characters, Kohnen's
identity in both directions, and streaming partial sums.

Evaluation routes:

- naive: the defining complete exponential sum over coprime residues, exact
  modular inverses, complex arithmetic with reduced arguments (the reference
  path every other route is gated against);
- weyl sums: square roots of D mod c by residue scan (c <= 10^4) or CRT over
  prime powers (beyond), gated on agreement;
- fast: Moebius inversion of Kohnen's identity turns a single S^+ whose
  second argument decomposes as w^2 d (d fundamental) into a short divisor
  sum of Weyl sums of discriminant D = d * (first argument); for first
  argument 0 the Weyl sums degenerate and are evaluated by an exact
  multiplicative formula (Ramanujan sums at primes dividing d). Cost drops
  from O(c) to roughly the divisor count of c.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import AccuracyError, AdmissibilityError, DomainError, ResourceError
from .ntheory import (
    Weight,
    WEIGHT_MINUS,
    WEIGHT_PLUS,
    divisors,
    factorize,
    fund_decompose,
    kronecker,
    moebius,
    ramanujan_sum,
    squarefree_part,
)
from .quadforms import GenusCharacterSpec, QuadForm, character_of_form, genus_character

STREAM_CAP_DEFAULT = 10**6
SCAN_SQRT_LIMIT = 10**4


def _admissible(wt: Weight, value: int) -> bool:
    return (wt.sign * value) % 4 in (0, 1)


def _mult_factor(c: int) -> int:
    """The plus-space projection weight: 1 if 8 | c, 2 if c = 4 mod 8."""
    return 1 if c % 8 == 0 else 2


def _eps_power(d: int, wt: Weight) -> complex:
    """eps_d^{2k}: eps_d for k = 1/2, its inverse (conjugate) for k = -1/2."""
    if d % 4 == 1:
        return 1 + 0j
    return 1j if wt.lam == 0 else -1j


# ---------------------------------------------------------------------------
# Query and record types


@dataclass(frozen=True)
class KloostermanQuery:
    """An admissible plus-space query: 4 | c and (-1)^lam m, n = 0,1 mod 4."""

    weight: Weight
    m: int
    n: int
    c: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise AdmissibilityError("KloostermanQuery requires positive m, n")
        if self.c < 1 or self.c % 4:
            raise AdmissibilityError(f"modulus must be a positive multiple of 4, got {self.c}")
        for label, value in (("m", self.m), ("n", self.n)):
            if not _admissible(self.weight, value):
                raise AdmissibilityError(
                    f"{label} = {value} has (-1)^lam {label} = {self.weight.sign * value} "
                    f"= 2,3 mod 4: outside the plus space for k = {self.weight.k}"
                )


@dataclass(frozen=True)
class PartialSumRecord:
    """One step of a cumulative partial-sum stream: value = sum of term(c')
    over admissible c' <= x."""

    x: float
    value: float
    term: float
    weight_mode: str
    query: str


# ---------------------------------------------------------------------------
# Defining sums


def s_theta_infinity(m: int, n: int, c: int, wt: Weight) -> complex:
    """The theta-multiplier cusp sum
    sum over d mod c, gcd(d,c)=1 of (c/d) eps_d^{2k} e((m dbar + n d)/c),
    for any integers m, n and 4 | c."""
    if c < 1 or c % 4:
        raise AdmissibilityError(f"s_theta_infinity requires 4 | c, got {c}")
    total = 0j
    tau = 2j * math.pi / c
    for d in range(1, c, 2):
        if math.gcd(d, c) != 1:
            continue
        dbar = pow(d, -1, c)
        term = kronecker(c, d) * _eps_power(d, wt)
        total += term * cmath.exp(tau * ((m * dbar + n * d) % c))
    return total


def s_plus_value(wt: Weight, m: int, n: int, c: int) -> float:
    """S_k^+(m,n,c) for any integers m, n in the plus space of weight k
    (negative and zero entries included; used by the identity routes).

    e(-k/4) * s_theta_infinity * (1 if 8|c else 2); the result is real and
    the discarded imaginary part is checked against 1e-10 * scale.
    """
    if not (_admissible(wt, m) and _admissible(wt, n)):
        raise AdmissibilityError(f"({m},{n}) inadmissible for weight {wt.k}")
    if c < 1 or c % 4:
        raise AdmissibilityError(f"modulus must be a positive multiple of 4, got {c}")
    phase = cmath.exp(-2j * math.pi * float(wt.k) / 4)
    value = phase * s_theta_infinity(m, n, c, wt) * _mult_factor(c)
    scale = max(1.0, abs(value))
    if abs(value.imag) > 1e-10 * scale:
        raise AccuracyError(f"S^+({m},{n},{c}) has imaginary part {value.imag}")
    return value.real


def s_plus(q: KloostermanQuery, method: str = "naive") -> float:
    """S_k^+(m,n,c) for an admissible query.

    method: 'naive' (defining sum), 'fast' (Kohnen-inversion route; raises
    DomainError when the query shape is unsupported), or 'auto' (fast when
    supported, else naive)."""
    if method == "naive":
        return s_plus_value(q.weight, q.m, q.n, q.c)
    if method == "fast":
        return s_plus_fast(q.weight, q.m, q.n, q.c)
    if method == "auto":
        try:
            return s_plus_fast(q.weight, q.m, q.n, q.c)
        except DomainError:
            return s_plus_value(q.weight, q.m, q.n, q.c)
    raise DomainError(f"unknown method {method!r}")


def weil_bound(m: int, n: int, c: int) -> float:
    """2 sigma_0(c) gcd(m,n,c)^(1/2) c^(1/2)."""
    if c < 1:
        raise DomainError("weil_bound requires c >= 1")
    sigma0 = len(divisors(c))
    g = math.gcd(math.gcd(abs(m), abs(n)), c)
    if g == 0:
        g = c
    return 2.0 * sigma0 * math.sqrt(g) * math.sqrt(c)


# ---------------------------------------------------------------------------
# Square roots modulo prime powers and CRT (for Weyl-sum b-enumeration)

_SPF_SIEVE: list[int] = []


def _spf_sieve(limit: int) -> list[int]:
    global _SPF_SIEVE
    if len(_SPF_SIEVE) <= limit:
        # grow geometrically: ascending-c callers would otherwise trigger
        # a full rebuild on every request
        size = max(limit + 1, 2 * len(_SPF_SIEVE), 1 << 16)
        spf = list(range(size))
        for p in range(2, math.isqrt(size - 1) + 1):
            if spf[p] == p:
                for q in range(p * p, size, p):
                    if spf[q] == q:
                        spf[q] = p
        _SPF_SIEVE = spf
    return _SPF_SIEVE


def _factorize_sieved(n: int) -> dict[int, int]:
    if n <= 1:
        return {}
    if n < 10**6:
        spf = _spf_sieve(n)
        out: dict[int, int] = {}
        while n > 1:
            p = spf[n]
            out[p] = out.get(p, 0) + 1
            n //= p
        return out
    return factorize(n)


def _tonelli(a: int, p: int) -> int | None:
    """One square root of a unit a modulo an odd prime p, else None."""
    a %= p
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def _unit_sqrt_mod_pk(a: int, p: int, e: int) -> list[int]:
    """All square roots of a unit a modulo p^e."""
    pe = p**e
    a %= pe
    if p == 2:
        if e == 1:
            return [1]
        if e == 2:
            return [1, 3] if a % 4 == 1 else []
        if a % 8 != 1:
            return []
        x = 1
        for k in range(3, e):
            if ((x * x - a) >> k) & 1:
                x += 1 << (k - 1)
        half = pe >> 1
        return sorted({x % pe, (-x) % pe, (x + half) % pe, (-x + half) % pe})
    root = _tonelli(a, p)
    if root is None:
        return []
    x, pk = root, p
    while pk < pe:
        pk_next = min(pk * pk, pe)
        # Newton lift: x -> (x + a / x) / 2 modulo pk_next
        x = (x + a * pow(x, -1, pk_next)) * pow(2, -1, pk_next) % pk_next
        pk = pk_next
    return sorted({x, pe - x})


def _sqrt_mod_pk(a: int, p: int, e: int) -> list[int]:
    """All square roots of a modulo p^e (a arbitrary)."""
    pe = p**e
    a %= pe
    if a == 0:
        step = p ** ((e + 1) // 2)
        return list(range(0, pe, step))
    v = 0
    aa = a
    while aa % p == 0:
        aa //= p
        v += 1
    if v % 2:
        return []
    h = e - v
    unit_roots = _unit_sqrt_mod_pk(aa, p, h)
    if not unit_roots:
        return []
    half = v // 2
    base_step = p**half
    lift_step = p ** (h + half)
    out: set[int] = set()
    for z in unit_roots:
        x0 = base_step * z
        for t in range(p**half):
            out.add((x0 + t * lift_step) % pe)
    return sorted(out)


def sqrt_mod(a: int, n: int, method: str = "auto") -> list[int]:
    """All x mod n with x^2 = a (mod n), sorted.

    method 'scan' checks every residue (reference path); 'crt' solves prime
    powers and combines; 'auto' scans for n <= 10^4 and uses CRT beyond."""
    if n < 1:
        raise DomainError("sqrt_mod requires n >= 1")
    if method == "auto":
        method = "scan" if n <= SCAN_SQRT_LIMIT else "crt"
    if method == "scan":
        a %= n
        return [b for b in range(n) if (b * b - a) % n == 0]
    if method != "crt":
        raise DomainError(f"unknown sqrt method {method!r}")
    residues = [0]
    modulus = 1
    for p, e in sorted(_factorize_sieved(n).items()):
        pe = p**e
        local = _sqrt_mod_pk(a, p, e)
        if not local:
            return []
        inv_m = pow(modulus % pe, -1, pe) if modulus % pe else None
        merged = []
        for r in residues:
            for s in local:
                # x = r (mod modulus), x = s (mod pe); moduli coprime
                t = ((s - r) * pow(modulus, -1, pe)) % pe
                merged.append(r + modulus * t)
        residues = merged
        modulus *= pe
    return sorted(x % n for x in residues)


# ---------------------------------------------------------------------------
# Weyl sums


def weyl_sum(
    m: int,
    spec: GenusCharacterSpec,
    c: int,
    sqrt_method: str = "auto",
    char_bound: int = 50,
) -> float:
    """T_m(d',d;c) = sum over b mod c with b^2 = D mod c of
    chi_d([c/4, b, (b^2-D)/c]) e(2mb/c); real, 0 when no b solves the
    congruence."""
    if m < 1:
        raise AdmissibilityError("weyl_sum requires m >= 1")
    _check_weyl_args(spec, c)
    value = _weyl_value(m, spec, c, sqrt_method, char_bound)
    scale = max(1.0, abs(value))
    if abs(value.imag) > 1e-10 * scale:
        raise AccuracyError(f"T_{m}({spec.d_prime},{spec.d};{c}) imaginary part {value.imag}")
    return value.real


def _check_weyl_args(spec: GenusCharacterSpec, c: int) -> None:
    if c < 4 or c % 4:
        raise AdmissibilityError(f"Weyl modulus must be a positive multiple of 4, got {c}")
    D = spec.D
    if D <= 0 or D % 4 not in (0, 1):
        raise AdmissibilityError(f"Weyl sums need a positive discriminant, got {D}")
    r = math.isqrt(D)
    if r * r == D:
        raise AdmissibilityError(f"Weyl sums need a nonsquare discriminant, got {D}")


def _weyl_value(
    m: int, spec: GenusCharacterSpec, c: int, sqrt_method: str, char_bound: int
) -> complex:
    D = spec.D
    total = 0j
    tau = 2j * math.pi / c
    for b in sqrt_mod(D % c, c, sqrt_method):
        form = QuadForm(c // 4, b, (b * b - D) // c)
        chi = genus_character(spec, form, bound=char_bound)
        if chi:
            total += chi * cmath.exp(tau * ((2 * m * b) % c))
    return total


def weyl_via_kohnen(m: int, spec: GenusCharacterSpec, c: int) -> float:
    """The same Weyl sum through Kohnen's identity:
    sum over n | (m, c/4) of (d/n) sqrt(2n/c) S_{1/2}^+(d', m^2 d / n^2, c/n),
    taking the weight -1/2 route (flipped arguments) when d, d' < 0."""
    if m < 1:
        raise AdmissibilityError("weyl_via_kohnen requires m >= 1")
    _check_weyl_args(spec, c)
    d, dp = spec.d, spec.d_prime
    total = 0.0
    for n in divisors(math.gcd(m, c // 4)):
        chi = kronecker(d, n)
        if chi == 0:
            continue
        mm = (m // n) ** 2 * d
        cc = c // n
        if d < 0:
            # S_{1/2}^+(dp, mm, cc) = S_{-1/2}^+(-dp, -mm, cc)
            s_val = s_plus_value(WEIGHT_MINUS, -dp, -mm, cc)
        else:
            s_val = s_plus_value(WEIGHT_PLUS, dp, mm, cc)
        total += chi * math.sqrt(2 * n / c) * s_val
    return total


# ---------------------------------------------------------------------------
# Degenerate (zero-discriminant) Weyl sums: exact multiplicative evaluation


def _f_local(d: int, w: int, p: int, a: int) -> int:
    """Local factor at p^a of the multiplicative function f with
    T_w(0, d; 4c) = 2 f(c): Ramanujan sums at p | d, truncated character
    powers at p coprime to d."""
    if d % p == 0:
        if a % 2:
            return 0
        return ramanujan_sum(p ** (a // 2), w)
    half = p ** (a // 2)
    if w % half:
        return 0
    return kronecker(d, p) ** (a & 1) * half


def weyl_zero_mult(d: int, w: int, c: int) -> float:
    """T_w(0, d; c) for 4 | c via the multiplicative formula 2 f(c/4)."""
    if c % 4:
        raise AdmissibilityError("weyl_zero_mult requires 4 | c")
    value = 2
    for p, a in _factorize_sieved(c // 4).items():
        value *= _f_local(d, w, p, a)
        if value == 0:
            return 0.0
    return float(value)


def weyl_zero_direct(d: int, w: int, c: int, char_bound: int = 50) -> float:
    """Reference path for the degenerate sums: enumerate b with b^2 = 0 mod c
    and sum genus characters of the (degenerate) forms [c/4, b, b^2/c]."""
    if c % 4:
        raise AdmissibilityError("weyl_zero_direct requires 4 | c")
    total = 0j
    tau = 2j * math.pi / c
    for b in sqrt_mod(0, c, "auto"):
        form = QuadForm(c // 4, b, (b * b) // c)
        chi = character_of_form(d, form, bound=char_bound)
        if chi:
            total += chi * cmath.exp(tau * ((2 * w * b) % c))
    if abs(total.imag) > 1e-9 * max(1.0, abs(total)):
        raise AccuracyError("degenerate Weyl sum not real")
    return total.real


# ---------------------------------------------------------------------------
# Fast path: Moebius inversion of Kohnen's identity


def _signed_fund_decompose(value: int) -> tuple[int, int]:
    """value = w^2 * d with d fundamental, for any value = 0,1 mod 4, != 0."""
    if value % 4 not in (0, 1) or value == 0:
        raise DomainError(f"{value} is not a nonzero discriminant-residue value")
    core = squarefree_part(value)
    d = core if core % 4 == 1 else 4 * core
    w = math.isqrt(value // d)
    if w * w * d != value:
        raise DomainError(f"decomposition failed for {value}")
    return d, w


def s_plus_fast(wt: Weight, m: int, n: int, c: int) -> float:
    """Fast S_k^+(m,n,c) via Moebius inversion of Kohnen's identity:

        S^+(d', w^2 d; c) = sqrt(c/2) * sum over t | (w, c/4) of
                            mu(t) (d/t) T_{w/t}(d, d'; c/t),

    with the Weyl sums of discriminant D = d d' evaluated by CRT
    b-enumeration, or by the exact multiplicative formula when d' = 0.
    Supported when one argument decomposes as w^2 d (d fundamental) and the
    induced D is zero or positive nonsquare; raises DomainError otherwise
    (callers fall back to the naive path)."""
    if not (_admissible(wt, m) and _admissible(wt, n)):
        raise AdmissibilityError(f"({m},{n}) inadmissible for weight {wt.k}")
    if c < 4 or c % 4:
        raise AdmissibilityError(f"modulus must be a positive multiple of 4, got {c}")
    sm, sn = wt.sign * m, wt.sign * n
    last_error: Exception | None = None
    for first, second in ((sm, sn), (sn, sm)):
        if second == 0:
            continue
        try:
            d, w = _signed_fund_decompose(second)
        except DomainError as exc:
            last_error = exc
            continue
        D = d * first
        if first == 0:
            total = 0.0
            for t in divisors(math.gcd(w, c // 4)):
                mu = moebius(t)
                if mu == 0:
                    continue
                chi = kronecker(d, t)
                if chi == 0:
                    continue
                total += mu * chi * weyl_zero_mult(d, w // t, c // t)
            return math.sqrt(c / 2) * total
        if D > 0 and math.isqrt(D) ** 2 != D:
            spec = GenusCharacterSpec(D=D, d=d, d_prime=first)
            total = 0.0
            for t in divisors(math.gcd(w, c // 4)):
                mu = moebius(t)
                if mu == 0:
                    continue
                chi = kronecker(d, t)
                if chi == 0:
                    continue
                total += mu * chi * _weyl_value(w // t, spec, c // t, "auto", 50).real
            return math.sqrt(c / 2) * total
        last_error = DomainError(f"induced discriminant {D} unsupported")
    raise DomainError(
        f"fast path unsupported for S^+({m},{n},{c}) at weight {wt.k}: {last_error}"
    )


# ---------------------------------------------------------------------------
# Streaming partial sums


@dataclass(frozen=True)
class KloostermanFamily:
    """The c-family S_k^+(m,n,c) over 4 | c, for partial-sum streams."""

    weight: Weight
    m: int
    n: int

    def __post_init__(self) -> None:
        if not (_admissible(self.weight, self.m) and _admissible(self.weight, self.n)):
            raise AdmissibilityError("inadmissible (m, n) for this weight")

    def describe(self) -> str:
        return f"S+(k={self.weight.k},m={self.m},n={self.n})"

    def default_weight_mode(self) -> str:
        return "inv_c"

    def raw_term(self, c: int, fast: bool) -> float:
        if fast:
            try:
                return s_plus_fast(self.weight, self.m, self.n, c)
            except DomainError:
                return s_plus_value(self.weight, self.m, self.n, c)
        return s_plus_value(self.weight, self.m, self.n, c)


@dataclass(frozen=True)
class WeylFamily:
    """The c-family T_m(d',d;c) over 4 | c."""

    m: int
    spec: GenusCharacterSpec

    def describe(self) -> str:
        return f"T(m={self.m},d={self.spec.d},d'={self.spec.d_prime})"

    def default_weight_mode(self) -> str:
        return "inv_sqrt_c"

    def raw_term(self, c: int, fast: bool) -> float:
        return weyl_sum(self.m, self.spec, c)


def partial_sum_stream(
    family: KloostermanFamily | WeylFamily,
    X: float,
    weight_mode: str | None = None,
    fast: bool = False,
    cap: float = STREAM_CAP_DEFAULT,
) -> Iterator[PartialSumRecord]:
    """Cumulative weighted sums over admissible moduli c = 4, 8, ... <= X,
    emitted incrementally; deterministic given the query."""
    if X > cap:
        raise ResourceError(f"stream cutoff {X} exceeds cap {cap}")
    mode = weight_mode or family.default_weight_mode()
    if mode not in ("inv_c", "inv_sqrt_c"):
        raise DomainError(f"unknown weight_mode {mode!r}")
    descriptor = family.describe()
    value = 0.0
    c = 4
    while c <= X:
        raw = family.raw_term(c, fast)
        term = raw / c if mode == "inv_c" else raw / math.sqrt(c)
        value += term
        yield PartialSumRecord(
            x=float(c), value=value, term=term, weight_mode=mode, query=descriptor
        )
        c += 4


# ---------------------------------------------------------------------------
# Bulk evaluation (whole (m, n) grids per modulus, BLAS inner loop)


def s_plus_table(wt: Weight, ms: list[int], ns: list[int], c: int) -> np.ndarray:
    """Matrix of S_k^+(m,n,c) over a grid of admissible m (rows) and n
    (columns), computed as two phase matrices around a diagonal of character
    weights. Complex entries returned so callers can check reality."""
    if c < 4 or c % 4:
        raise AdmissibilityError(f"modulus must be a positive multiple of 4, got {c}")
    for v in list(ms) + list(ns):
        if not _admissible(wt, v):
            raise AdmissibilityError(f"{v} inadmissible for weight {wt.k}")
    ds = np.array([d for d in range(1, c, 2) if math.gcd(d, c) == 1], dtype=np.int64)
    if ds.size == 0:
        return np.zeros((len(ms), len(ns)), dtype=complex)
    invs = np.array([pow(int(d), -1, c) for d in ds], dtype=np.int64)
    coef = np.array(
        [kronecker(c, int(d)) * _eps_power(int(d), wt) for d in ds], dtype=complex
    )
    tau = 2j * np.pi / c
    ms_arr = np.asarray(ms, dtype=np.int64)
    ns_arr = np.asarray(ns, dtype=np.int64)
    A = np.exp(tau * (np.outer(ms_arr, invs) % c))
    B = np.exp(tau * (np.outer(ds, ns_arr) % c))
    phase = cmath.exp(-2j * math.pi * float(wt.k) / 4) * _mult_factor(c)
    return phase * ((A * coef[None, :]) @ B)
