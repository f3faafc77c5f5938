"""Binary quadratic forms of positive and negative discriminant: reduction,
class enumeration, minus-continued-fraction cycles, automorphs and
fundamental Pell units, and genus characters.

All arithmetic on forms, roots, and automorph words is exact (integers and
integer square-root comparisons); floats appear only in the final log of the
Pell unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import mpmath

from .errors import AdmissibilityError, DomainError, SearchError
from .ntheory import divisors, is_fundamental, kronecker

Matrix = tuple[tuple[int, int], tuple[int, int]]

IDENTITY: Matrix = ((1, 0), (0, 1))
T_GEN: Matrix = ((1, 1), (0, 1))
S_GEN: Matrix = ((0, -1), (1, 0))


def mat_mul(x: Matrix, y: Matrix) -> Matrix:
    (a, b), (c, d) = x
    (p, q), (r, s) = y
    return ((a * p + b * r, a * q + b * s), (c * p + d * r, c * q + d * s))


def mat_pow(x: Matrix, n: int) -> Matrix:
    out = IDENTITY
    base = x
    if n < 0:
        raise DomainError("mat_pow requires n >= 0")
    while n:
        if n & 1:
            out = mat_mul(out, base)
        base = mat_mul(base, base)
        n >>= 1
    return out


# ---------------------------------------------------------------------------
# Forms


@dataclass(frozen=True)
class QuadForm:
    """Integral binary quadratic form [a, b, c] = a x^2 + b x y + c y^2."""

    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def content(self) -> int:
        return math.gcd(math.gcd(self.a, self.b), self.c)

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def apply(self, g: Matrix) -> "QuadForm":
        """The form Q o g, acting on column vectors: (x,y) -> g(x,y)."""
        (p, q), (r, s) = g
        a = self(p, r)
        c = self(q, s)
        b = 2 * (self.a * p * q + self.c * r * s) + self.b * (p * s + q * r)
        return QuadForm(a, b, c)

    def __iter__(self) -> Iterator[int]:
        return iter((self.a, self.b, self.c))

    def __repr__(self) -> str:
        return f"[{self.a},{self.b},{self.c}]"


# ---------------------------------------------------------------------------
# Exact comparisons against the root w = (-b + sqrt(D)) / (2a), D nonsquare


def _check_positive_nonsquare(D: int) -> None:
    if D <= 0 or D % 4 not in (0, 1):
        raise AdmissibilityError(f"{D} is not a positive discriminant")
    r = math.isqrt(D)
    if r * r == D:
        raise AdmissibilityError(f"{D} is a perfect square")


def _root_le_int(form: QuadForm, t: int) -> bool:
    """Exact test w <= t for the larger root w = (-b + sqrt(D)) / (2a)."""
    a, b = form.a, form.b
    D = form.disc
    if a > 0:
        # w <= t  <=>  sqrt(D) <= 2at + b
        s = 2 * a * t + b
        return s >= 0 and s * s > D  # D nonsquare: equality impossible
    # a < 0: dividing by 2a flips:  w <= t  <=>  sqrt(D) >= 2at + b
    s = 2 * a * t + b
    return s <= 0 or s * s < D


def root_ceil(form: QuadForm) -> int:
    """Exact ceil of the larger root w of the form (disc > 0 nonsquare)."""
    a, b = form.a, form.b
    D = form.disc
    if a == 0:
        raise DomainError("form with a = 0 has no finite root pair")
    t = math.floor((-b + math.sqrt(D)) / (2 * a))  # float seed, then exact fix-up
    while not _root_le_int(form, t):
        t += 1
    while t >= 1 + min(t, 0) and _root_le_int(form, t - 1):
        t -= 1
    return t


def is_zagier_reduced(form: QuadForm) -> bool:
    """Zagier reduction domain: root pair satisfies 0 < w^sigma < 1 < w,
    which for integer forms is exactly a > 0, c > 0, a + b + c < 0."""
    return form.a > 0 and form.c > 0 and form.a + form.b + form.c < 0


def zagier_step(form: QuadForm) -> tuple[QuadForm, int]:
    """One minus-continued-fraction step: with n = ceil(w), the successor is
    Q o (T^n S), whose root is 1 / (n - w) shifted along the expansion."""
    n = root_ceil(form)
    a, b = form.a, form.b
    succ = QuadForm(form(n, 1), -2 * a * n - b, a)
    return succ, n


# ---------------------------------------------------------------------------
# Cycles


@dataclass(frozen=True)
class FormCycle:
    """One narrow class: the cycle of Zagier-reduced forms, the exponents of
    its minus continued fraction, and the automorph word in T, S."""

    forms: tuple[QuadForm, ...]
    cf_exponents: tuple[int, ...]
    automorph_word: tuple[str, ...]
    ell: int

    def __post_init__(self) -> None:
        if not (len(self.forms) == len(self.cf_exponents) == self.ell) or self.ell < 1:
            raise DomainError("cycle length bookkeeping inconsistent")

    @property
    def disc(self) -> int:
        return self.forms[0].disc

    def automorph_matrix(self) -> Matrix:
        """Exact integer matrix of the word T^{n_1} S ... T^{n_ell} S; fixes
        the root of the first form."""
        out = IDENTITY
        for n in self.cf_exponents:
            out = mat_mul(out, mat_mul(mat_pow(T_GEN, n), S_GEN))
        return out

    def automorph_trace(self) -> int:
        m = self.automorph_matrix()
        return abs(m[0][0] + m[1][1])

    def length(self) -> float:
        """Hyperbolic length of the closed geodesic: 2 arccosh(t/2) for the
        automorph trace t, computed stably for huge t."""
        t = self.automorph_trace()
        return 2.0 * _log_half_sum(t, t * t - 4)


def _log_half_sum(t: int, disc_square: int) -> float:
    """log((t + sqrt(disc_square)) / 2) for big integers, via mpmath."""
    with mpmath.workprec(max(64, t.bit_length() + 32)):
        return float(mpmath.log((t + mpmath.sqrt(disc_square)) / 2))


def _reduced_seed(D: int) -> QuadForm:
    """A primitive form of discriminant D (a = 1)."""
    b = D % 2
    return QuadForm(1, b, (b * b - D) // 4)


def enumerate_zagier_reduced(D: int) -> list[QuadForm]:
    """All Zagier-reduced forms of discriminant D, by direct inequalities:
    a > 0, c > 0, a + b + c < 0 force b < 0, b^2 > D... the workable bounds
    are sqrt(D) < -b <= (D+1)/2 with b = D mod 2, and a c = (b^2 - D)/4 with
    a + c < -b."""
    _check_positive_nonsquare(D)
    out: list[QuadForm] = []
    b = -(math.isqrt(D) + 1)
    if (b - D) % 2:
        b -= 1
    lo = -((D + 1) // 2)
    while b >= lo:
        P = (b * b - D) // 4
        if P > 0:
            for a in divisors(P):
                c = P // a
                if a + c < -b:
                    out.append(QuadForm(a, b, c))
        b -= 2
    return out


def _canonical_rotation(
    forms: list[QuadForm], exps: list[int]
) -> tuple[tuple[QuadForm, ...], tuple[int, ...]]:
    """Rotate so cf_exponents are lexicographically minimal; ties broken by
    the smallest first form triple."""
    ell = len(exps)
    best_key = None
    best_r = 0
    for r in range(ell):
        key = (tuple(exps[r:] + exps[:r]), tuple(forms[r]))
        if best_key is None or key < best_key:
            best_key, best_r = key, r
    r = best_r
    return tuple(forms[r:] + forms[:r]), tuple(exps[r:] + exps[:r])


@lru_cache(maxsize=512)
def zagier_cycles(D: int) -> tuple[FormCycle, ...]:
    """All minus-continued-fraction cycles of discriminant D: one per
    narrow class of forms (imprimitive classes included when D is not
    fundamental). The union of all cycles is exactly the set of
    Zagier-reduced forms of discriminant D."""
    reduced = enumerate_zagier_reduced(D)
    reduced_set = set(map(tuple, reduced))
    seen: set[tuple[int, int, int]] = set()
    cycles: list[FormCycle] = []
    for start in reduced:
        key = tuple(start)
        if key in seen:
            continue
        forms: list[QuadForm] = []
        exps: list[int] = []
        current = start
        while True:
            forms.append(current)
            succ, n = zagier_step(current)
            exps.append(n)
            if tuple(succ) not in reduced_set:
                raise DomainError(f"minus-CF step left the reduced domain at {current}")
            if succ == start:
                break
            current = succ
        for f in forms:
            seen.add(tuple(f))
        cforms, cexps = _canonical_rotation(forms, exps)
        word: list[str] = []
        for n in cexps:
            word.extend(["T"] * n)
            word.append("S")
        cycles.append(
            FormCycle(
                forms=cforms,
                cf_exponents=cexps,
                automorph_word=tuple(word),
                ell=len(cexps),
            )
        )
    cycles.sort(key=lambda cyc: (cyc.cf_exponents, tuple(cyc.forms[0])))
    return tuple(cycles)


def narrow_class_count(D: int) -> int:
    """Number of cycles; h+(D) = #Cl+_D for fundamental D."""
    return len(zagier_cycles(D))


# ---------------------------------------------------------------------------
# Pell units and geodesic lengths


@dataclass(frozen=True)
class PellUnit:
    """Minimal (t, u) with t^2 - D u^2 = 4; log_eps = log((t + u sqrt(D))/2)."""

    D: int
    t: int
    u: int
    log_eps: float

    def __post_init__(self) -> None:
        if self.t * self.t - self.D * self.u * self.u != 4:
            raise DomainError("PellUnit does not satisfy t^2 - D u^2 = 4")


def fundamental_automorph(D: int) -> PellUnit:
    """Fundamental Pell unit of discriminant D, from the automorph word of a
    primitive cycle: the word matrix has |trace| = t for the minimal positive
    solution of t^2 - D u^2 = 4, and u is recovered exactly."""
    _check_positive_nonsquare(D)
    cycle = reduction_cycle(_reduced_seed(D))
    t = cycle.automorph_trace()
    num = t * t - 4
    u = math.isqrt(num // D)
    if u * u * D != num:
        raise DomainError(f"automorph trace {t} is not a Pell solution for D={D}")
    return PellUnit(D=D, t=t, u=u, log_eps=_log_half_sum(t, num))


def total_geodesic_length(D: int) -> float:
    """Sum of the lengths of all class geodesics of discriminant D. Equals
    h+(D) * 2 log eps_D when every class is primitive (always for
    fundamental D); imprimitive classes contribute their own, shorter
    automorph lengths."""
    return sum(cyc.length() for cyc in zagier_cycles(D))


# ---------------------------------------------------------------------------
# Reduction of arbitrary indefinite forms to their cycle


@lru_cache(maxsize=65536)
def _cycle_index_of(triple: tuple[int, int, int], D: int) -> int:
    form = QuadForm(*triple)
    limit = 4 * (D.bit_length() + 8) + 64
    current = form
    for _ in range(limit):
        if is_zagier_reduced(current):
            for idx, cyc in enumerate(zagier_cycles(D)):
                if current in cyc.forms:
                    return idx
            raise DomainError(f"reduced form {current} missing from every cycle of D={D}")
        current, _n = zagier_step(current)
    raise DomainError(f"reduction of {form} did not terminate in {limit} steps")


def reduction_cycle(form: QuadForm) -> FormCycle:
    """The cycle of the class of an arbitrary form with positive nonsquare
    discriminant, by iterating the minus-CF step until the reduced domain is
    reached (cycles partition the reduced forms, so the first reduced form
    hit identifies the class)."""
    D = form.disc
    _check_positive_nonsquare(D)
    return zagier_cycles(D)[_cycle_index_of(tuple(form), D)]


def cycle_index(form: QuadForm) -> int:
    """Index of the form's class in zagier_cycles(disc)."""
    D = form.disc
    _check_positive_nonsquare(D)
    return _cycle_index_of(tuple(form), D)


# ---------------------------------------------------------------------------
# Genus characters


@dataclass(frozen=True)
class GenusCharacterSpec:
    """A factorization D = d * d_prime with d fundamental and d_prime a
    discriminant, carrying the genus character chi_d on classes of
    discriminant D. Both factors must be 0 or 1 mod 4: the character is
    only well-defined on classes (constant on cycles) for factorizations
    into discriminants."""

    D: int
    d: int
    d_prime: int

    def __post_init__(self) -> None:
        if self.d * self.d_prime != self.D:
            raise AdmissibilityError("GenusCharacterSpec requires D = d * d_prime exactly")
        if not is_fundamental(self.d):
            raise AdmissibilityError(f"genus character factor {self.d} is not fundamental")
        if self.d_prime % 4 not in (0, 1):
            raise AdmissibilityError(
                f"cofactor {self.d_prime} is not a discriminant (2, 3 mod 4)"
            )

    @classmethod
    def from_divisor(cls, D: int, d: int) -> "GenusCharacterSpec":
        if d == 0 or D % d != 0:
            raise AdmissibilityError(f"{d} does not divide {D}")
        return cls(D=D, d=d, d_prime=D // d)


def character_of_form(d: int, Q: QuadForm, bound: int = 50) -> int:
    """(d/n) for the first value n represented by Q with gcd(d, n) = 1, or 0
    when gcd(a, b, c, d) > 1. The search scans Q(x, y) over |x|, |y| <= bound
    in a deterministic ring order. Degenerate forms (disc 0) are allowed."""
    if d == 1:
        return 1  # gcd(a,b,c,1) = 1 always and (1/n) = 1
    if math.gcd(Q.content, abs(d)) > 1:
        return 0
    for r in range(1, bound + 1):
        ring: set[tuple[int, int]] = set()
        for x in range(-r, r + 1):
            ring.add((x, r))
            ring.add((x, -r))
        for y in range(-r + 1, r):
            ring.add((r, y))
            ring.add((-r, y))
        for point in sorted(ring):
            n = Q(*point)
            if n != 0 and math.gcd(n, abs(d)) == 1:
                return kronecker(d, n)
    raise SearchError(
        f"no value represented by {Q} coprime to {d} within |x|,|y| <= {bound}"
    )


def genus_character(spec: GenusCharacterSpec, Q: QuadForm, bound: int = 50) -> int:
    """chi_d(Q): 0 iff gcd(a, b, c, d) > 1, else (d/n) for any value n
    represented by Q with gcd(d, n) = 1."""
    if Q.disc != spec.D:
        raise AdmissibilityError(f"form {Q} has disc {Q.disc}, spec carries {spec.D}")
    return character_of_form(spec.d, Q, bound)


# ---------------------------------------------------------------------------
# Imaginary (negative) discriminants


class ImaginaryForms(NamedTuple):
    forms: tuple[QuadForm, ...]
    h: int
    omega: int


def reduced_forms_imaginary(d: int) -> ImaginaryForms:
    """All primitive reduced forms of negative discriminant d
    (|b| <= a <= c, b >= 0 when |b| = a or a = c), their count h, and the
    unit count omega (3 for d = -3, 2 for d = -4, else 1)."""
    if d >= 0 or d % 4 not in (0, 1):
        raise AdmissibilityError(f"reduced_forms_imaginary requires a negative discriminant, got {d}")
    forms: list[QuadForm] = []
    amax = math.isqrt(-d // 3) if d <= -3 else 0
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            num = b * b - d
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if b < 0 and (a == c or -b == a):
                continue
            form = QuadForm(a, b, c)
            if form.content == 1:
                forms.append(form)
    forms.sort(key=tuple)
    omega = 3 if d == -3 else 2 if d == -4 else 1
    return ImaginaryForms(forms=tuple(forms), h=len(forms), omega=omega)


def class_number_imaginary(d: int) -> int:
    return reduced_forms_imaginary(d).h


# ---------------------------------------------------------------------------
# CSV export rows for cycles


def cycle_rows(D: int) -> list[dict[str, object]]:
    """Rows for the cycles CSV: one row per form, columns D, class_index,
    ell, cf_exponents (semicolon-joined), a, b, c."""
    rows: list[dict[str, object]] = []
    for idx, cyc in enumerate(zagier_cycles(D)):
        exps = ";".join(str(n) for n in cyc.cf_exponents)
        for form in cyc.forms:
            rows.append(
                {
                    "D": D,
                    "class_index": idx,
                    "ell": cyc.ell,
                    "cf_exponents": exps,
                    "a": form.a,
                    "b": form.b,
                    "c": form.c,
                }
            )
    return rows
