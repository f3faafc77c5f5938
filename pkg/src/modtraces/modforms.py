"""The modular j-invariant and its Faber basis j_m: exact integer
q-expansions (j = E_4^3 / Delta with a JSON disk cache), monic Faber
polynomials P_m with P_m(j) = q^-m + O(q) and zero constant term,
fundamental-domain reduction with exact matrix words, pointwise evaluation
of j_m in double or extended (mpmath) precision, and CM traces over
Heegner points of negative discriminants.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import mpmath

from .errors import AccuracyError, DomainError, ModeError, ResourceError
from .ntheory import sigma_int
from .quadforms import Matrix, IDENTITY, mat_mul, reduced_forms_imaginary

J_SERIES_CAP = 256
FABER_CAP = 32
IM_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# Exact integer series helpers (lists indexed by exponent from 0)


def _conv(a: list[int], b: list[int], n: int) -> list[int]:
    out = [0] * (n + 1)
    for i, ai in enumerate(a[: n + 1]):
        if ai == 0:
            continue
        top = min(len(b), n + 1 - i)
        for j in range(top):
            if b[j]:
                out[i + j] += ai * b[j]
    return out


def _eta_power_24(n: int) -> list[int]:
    """Coefficients of prod (1 - q^k)^24 up to q^n, via the pentagonal-number
    series squared and recombined."""
    base = [0] * (n + 1)
    k = 0
    while True:
        stop = True
        for kk in (k, -k) if k else (0,):
            g = kk * (3 * kk - 1) // 2
            if g <= n:
                base[g] += -1 if kk % 2 else 1
                stop = False
        if stop and k > 0:
            break
        k += 1
    p2 = _conv(base, base, n)
    p4 = _conv(p2, p2, n)
    p8 = _conv(p4, p4, n)
    p16 = _conv(p8, p8, n)
    return _conv(p16, p8, n)


def eisenstein_coefficients(weight: int, n: int) -> list[int]:
    """q-expansion of the level-one Eisenstein series E_4 or E_6 up to q^n."""
    if weight == 4:
        factor, power = 240, 3
    elif weight == 6:
        factor, power = -504, 5
    else:
        raise DomainError(f"only weights 4 and 6 are available, got {weight}")
    out = [1] + [factor * sigma_int(k, power) for k in range(1, n + 1)]
    return out


def _compute_j(n: int) -> list[int]:
    """Coefficients of j from q^-1 to q^n, exactly, as j = E_4^3 / Delta."""
    top = n + 1
    e4 = eisenstein_coefficients(4, top)
    a = _conv(_conv(e4, e4, top), e4, top)
    b = _eta_power_24(top)  # Delta = q * b
    # c = a / b by forward substitution; b[0] = 1
    c = [0] * (top + 1)
    for i in range(top + 1):
        acc = a[i]
        for k in range(1, i + 1):
            if b[k] and c[i - k]:
                acc -= b[k] * c[i - k]
        c[i] = acc
    # j = q^-1 * c
    return c


# ---------------------------------------------------------------------------
# Disk cache for the j-expansion


def resolve_cache_dir(explicit: str | Path | None = None) -> Path:
    """Cache directory: explicit argument, then MODTRACES_CACHE, then
    ~/.cache/modtraces."""
    if explicit is not None:
        root = Path(explicit)
    elif os.environ.get("MODTRACES_CACHE"):
        root = Path(os.environ["MODTRACES_CACHE"])
    else:
        root = Path.home() / ".cache" / "modtraces"
    root.mkdir(parents=True, exist_ok=True)
    return root


_J_MEMO: list[int] = []


def j_coefficients(n: int, cache_dir: str | Path | None = None) -> tuple[int, ...]:
    """Integer coefficients of j from q^-1 through q^n (length n + 2).

    Results are memoized in-process and persisted to j_qexp.json in the
    cache directory (written atomically); n is capped at 256."""
    if n < 0:
        raise DomainError("j_coefficients requires n >= 0")
    if n > J_SERIES_CAP:
        raise ResourceError(f"j-expansion length {n} exceeds cap {J_SERIES_CAP}")
    global _J_MEMO
    if len(_J_MEMO) >= n + 2:
        return tuple(_J_MEMO[: n + 2])
    root = resolve_cache_dir(cache_dir)
    path = root / "j_qexp.json"
    if path.exists():
        try:
            data = json.loads(path.read_text())
            if data.get("kind") == "j_qexp" and data.get("N", -1) >= n:
                coeffs = [int(s) for s in data["coeffs"]]
                if len(coeffs) > len(_J_MEMO):
                    _J_MEMO = coeffs
                return tuple(coeffs[: n + 2])
        except (ValueError, KeyError, TypeError):
            pass  # corrupt cache: recompute and overwrite
    target = min(max(n, 64), J_SERIES_CAP)
    coeffs = _compute_j(target)
    _J_MEMO = coeffs
    payload = {
        "kind": "j_qexp",
        "N": target,
        "coeffs": [str(v) for v in coeffs],
    }
    fd, tmp = tempfile.mkstemp(dir=root, prefix="j_qexp.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return tuple(coeffs[: n + 2])


# ---------------------------------------------------------------------------
# q-expansions with principal parts


@dataclass(frozen=True)
class QSeries:
    """A truncated integer q-expansion: coeffs[i] multiplies q^(n_min + i)."""

    n_min: int
    coeffs: tuple[int, ...]

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.coeffs) - 1

    def coeff(self, n: int) -> int:
        if n < self.n_min:
            return 0
        if n > self.n_max:
            raise DomainError(f"coefficient q^{n} beyond truncation {self.n_max}")
        return self.coeffs[n - self.n_min]


@dataclass(frozen=True)
class FaberPolynomial:
    """P_m, monic of degree m in j, with P_m(j) = q^-m + O(q) (constant term
    of the expansion is zero). coeffs are descending: X^m, ..., X^0."""

    m: int
    coeffs: tuple[int, ...]

    def __call__(self, x: complex) -> complex:
        acc = 0j if isinstance(x, complex) else mpmath.mpc(0)
        for coef in self.coeffs:
            acc = acc * x + coef
        return acc


def faber_polynomial(m: int, cache_dir: str | Path | None = None) -> FaberPolynomial:
    """The monic degree-m polynomial with P_m(j(z)) = q^-m + O(q)."""
    if m < 0:
        raise DomainError("faber_polynomial requires m >= 0")
    if m > FABER_CAP:
        raise ResourceError(f"Faber degree {m} exceeds cap {FABER_CAP}")
    if m == 0:
        return FaberPolynomial(0, (1,))
    j = j_coefficients(m, cache_dir)  # q^-1 .. q^m

    # powers[k][i] = coefficient of q^(i - k) in j^k, kept through q^(m - k):
    # every power has m + 1 stored coefficients, enough look-ahead for the
    # remaining multiplications by j (principal part q^-1) to stay exact.
    def mul_j(series: list[int], k: int) -> list[int]:
        out = [0] * (m + 1)
        for i, s in enumerate(series):  # exponent i - (k - 1)
            if s == 0:
                continue
            base = i - (k - 1)
            for t, jv in enumerate(j):  # exponent t - 1
                e = base + (t - 1)
                if e > m - k:
                    break
                if jv:
                    out[e + k] += s * jv
        return out

    powers: list[list[int]] = [[1] + [0] * m]
    for k in range(1, m + 1):
        powers.append(mul_j(powers[k - 1], k))

    residual = list(powers[m])  # exponents -m .. 0
    coeffs = [0] * (m + 1)
    coeffs[0] = 1
    for e in range(m - 1, -1, -1):
        c = residual[m - e]  # coefficient of q^-e
        if c:
            coeffs[m - e] = -c
            pw = powers[e]
            for i in range(e + 1):  # exponents i - e <= 0 only
                if pw[i]:
                    residual[(i - e) + m] -= c * pw[i]
    assert residual == [1] + [0] * m
    return FaberPolynomial(m, tuple(coeffs))


def jm_coefficients(m: int, n: int, cache_dir: str | Path | None = None) -> QSeries:
    """Exact q-expansion of j_m = P_m(j) from q^-m through q^n."""
    if m < 1:
        raise DomainError("jm_coefficients requires m >= 1")
    if n > J_SERIES_CAP - m:
        raise ResourceError(f"truncation {n} exceeds cap {J_SERIES_CAP - m}")
    poly = faber_polynomial(m, cache_dir)
    j = j_coefficients(n + m, cache_dir)  # q^-1 .. q^(n+m)
    top = n + m  # work with exponents shifted by the current principal order

    # Horner: S <- S * j + coef, exact, truncated at q^n
    series: list[int] = [poly.coeffs[0]]  # j^0 term of Horner state, order 0
    order = 0  # current principal order: series[i] multiplies q^(i - order)
    for coef in poly.coeffs[1:]:
        order += 1
        new = [0] * (n + order + 1)
        for i, s in enumerate(series):
            if s == 0:
                continue
            base = i - (order - 1)  # exponent in the old state
            for t, jv in enumerate(j):
                e = base + (t - 1)
                if e > n:
                    break
                new[e + order] += s * jv
        new[order] += coef
        series = new
    return QSeries(n_min=-m, coeffs=tuple(series))


# ---------------------------------------------------------------------------
# Fundamental-domain reduction


@dataclass(frozen=True)
class DomainPoint:
    """A point of the standard fundamental domain (|Re z| <= 1/2, |z| >= 1)
    together with the integer matrix g carrying the original point to z."""

    z: complex
    word: Matrix

    def __post_init__(self) -> None:
        if self.z.imag <= 0:
            raise DomainError(f"domain point must have positive height, got {self.z}")
        if abs(self.z.real) > 0.5 + 1e-9 or abs(self.z) < 1 - 1e-9:
            raise DomainError(f"{self.z} lies outside the fundamental domain")


def _apply_matrix(g: Matrix, z: complex) -> complex:
    (a, b), (c, d) = g
    return (a * z + b) / (c * z + d)


_S_MAT: Matrix = ((0, -1), (1, 0))


def reduce_to_fundamental_domain(z: complex, max_steps: int = 10_000) -> DomainPoint:
    """Translate-invert until |Re| <= 1/2 and |z| >= 1, accumulating the
    exact integer word. Heights at or below 1e-8 are rejected."""
    if z.imag <= IM_FLOOR:
        raise DomainError(f"height {z.imag} at or below the floor {IM_FLOOR}")
    w = complex(z)
    g: Matrix = IDENTITY
    for _ in range(max_steps):
        shift = math.floor(w.real + 0.5)
        if shift:
            w = complex(w.real - shift, w.imag)
            g = mat_mul(((1, -shift), (0, 1)), g)
        if abs(w) < 1 - 1e-15:
            w = -1 / w
            g = mat_mul(_S_MAT, g)
        else:
            return DomainPoint(z=w, word=g)
    raise DomainError(f"reduction of {z} did not terminate in {max_steps} steps")


# ---------------------------------------------------------------------------
# Evaluation of j_m


def _series_cutoff(m: int, im_z: float, tol: float) -> int:
    """Smallest truncation with a safe tail bound: |c_m(n)| <= n e^(4 pi
    sqrt(m n)) and |q| = e^(-2 pi Im z), summed geometrically."""
    decay = 2 * math.pi * im_z
    n = 8
    while n <= J_SERIES_CAP - m:
        log_term = math.log(4 * n) + 4 * math.pi * math.sqrt(m * n) - decay * n
        if log_term < math.log(tol) - 2:
            return n
        n += 8
    raise AccuracyError(
        f"series cap cannot reach tolerance {tol} at height {im_z} for m = {m}"
    )


def eval_jm(
    m: int,
    z,
    mode: str = "double",
    tol: float = 1e-10,
    cache_dir: str | Path | None = None,
):
    """j_m(z) by q-expansion at the reduced representative.

    mode 'double' returns complex and raises ModeError when double rounding
    of the principal term already exceeds tol; mode 'extended' returns an
    mpmath.mpc evaluated with enough working digits for tol. In extended
    mode z may be an mpmath.mpc carrying more precision than a double: the
    reduction word is found on the double shadow and applied to z exactly
    (tol is then honest only if z itself carries enough digits)."""
    point = reduce_to_fundamental_domain(complex(z))
    zr = point.z
    n_cut = _series_cutoff(m, zr.imag, tol)
    series = jm_coefficients(m, n_cut, cache_dir)
    magnitude = math.exp(2 * math.pi * m * zr.imag)
    if mode == "double":
        if magnitude * 3e-16 > tol:
            raise ModeError(
                f"double precision leaves absolute error ~{magnitude * 3e-16:.2e} "
                f"> tol {tol}; use extended mode"
            )
        q = complex(
            math.e ** (-2 * math.pi * zr.imag) * math.cos(2 * math.pi * zr.real),
            math.e ** (-2 * math.pi * zr.imag) * math.sin(2 * math.pi * zr.real),
        )
        acc = 0j
        for coef in reversed(series.coeffs):
            acc = acc * q + coef
        return acc * q ** series.n_min
    if mode != "extended":
        raise ModeError(f"unknown evaluation mode {mode!r}")
    digits = int(math.log10(max(magnitude, 1.0))) + int(-math.log10(tol)) + 15
    with mpmath.workdps(max(30, digits)):
        zm = _apply_matrix(point.word, mpmath.mpc(z))
        q = mpmath.exp(2j * mpmath.pi * zm)
        acc = mpmath.mpc(0)
        for coef in reversed(series.coeffs):
            acc = acc * q + coef
        return acc * q**series.n_min


# ---------------------------------------------------------------------------
# CM traces


def _heegner_weight(a: int, b: int, c: int) -> int:
    if a == b == c:
        return 3
    if b == 0 and a == c:
        return 2
    return 1


def cm_trace(
    d: int,
    m: int = 1,
    mode: str = "auto",
    tol: float = 1e-8,
    cache_dir: str | Path | None = None,
) -> float:
    """Tr_d(j_m) = sum over reduced primitive forms of discriminant d of
    j_m(z_Q) / w_Q, with w_Q = 3 (resp. 2) for the stabilized classes of
    discriminant -3 (resp. -4), else 1. The value is a rational integer."""
    if d >= 0 or d % 4 not in (0, 1):
        raise DomainError(f"{d} is not a negative discriminant")
    if m < 1:
        raise DomainError("cm_trace requires m >= 1")
    forms = reduced_forms_imaginary(d).forms
    sq = math.sqrt(-d)
    if mode == "auto":
        peak = math.exp(math.pi * m * sq)  # height sqrt(|d|)/2 at a = 1
        mode = "double" if peak * 3e-16 <= tol else "extended"
    if mode == "extended":
        # CM points must carry full precision: a double sqrt already moves
        # j_m by ~ 4 pi m |j_m| * 1e-16, visible at these tolerances
        peak = math.exp(math.pi * m * sq)
        digits = int(math.log10(max(peak, 1.0))) + int(-math.log10(tol)) + 20
        with mpmath.workdps(max(35, digits)):
            root = mpmath.sqrt(-d)
            acc = mpmath.mpc(0)
            for Q in forms:
                z = mpmath.mpc(mpmath.mpf(-Q.b) / (2 * Q.a), root / (2 * Q.a))
                value = eval_jm(m, z, mode="extended", tol=tol, cache_dir=cache_dir)
                acc += value / _heegner_weight(Q.a, Q.b, Q.c)
            # individual singular moduli are complex; conjugate classes
            # cancel, so only the trace is checked for reality
            if abs(mpmath.im(acc)) > max(1.0, abs(mpmath.re(acc))) * 1e-7:
                raise AccuracyError(f"trace has imaginary part {mpmath.im(acc)}")
            return float(mpmath.re(acc))
    total = 0j
    for Q in forms:
        z = complex(-Q.b / (2 * Q.a), sq / (2 * Q.a))
        total += eval_jm(m, z, mode=mode, tol=tol, cache_dir=cache_dir) / (
            _heegner_weight(Q.a, Q.b, Q.c)
        )
    if abs(total.imag) > max(1.0, abs(total.real)) * 1e-7:
        raise AccuracyError(f"trace has imaginary part {total.imag}")
    return total.real


def cm_trace_integer_defect(
    d: int, m: int = 1, cache_dir: str | Path | None = None
) -> float:
    """Distance from Tr_d(j_m) to the nearest integer."""
    t = cm_trace(d, m, cache_dir=cache_dir)
    return abs(t - round(t))


def cm_trace_deviation(
    d: int, m: int = 1, cache_dir: str | Path | None = None
) -> float:
    """Tr_d(j_m) minus the principal exponentials e(-m z_Q) of the Heegner
    points with height strictly above 1: the high points contribute their
    series tails exactly, the low points contribute their full values."""
    if d >= 0 or d % 4 not in (0, 1):
        raise DomainError(f"{d} is not a negative discriminant")
    if m < 1:
        raise DomainError("cm_trace_deviation requires m >= 1")
    forms = reduced_forms_imaginary(d).forms
    sq = math.sqrt(-d)
    n_cut = _series_cutoff(m, 0.8, 1e-10)  # lowest height of a reduced point
    series = jm_coefficients(m, n_cut, cache_dir)
    total = 0j
    for Q in forms:
        z = complex(-Q.b / (2 * Q.a), sq / (2 * Q.a))
        q = complex(
            math.e ** (-2 * math.pi * z.imag) * math.cos(2 * math.pi * z.real),
            math.e ** (-2 * math.pi * z.imag) * math.sin(2 * math.pi * z.real),
        )
        if z.imag > 1:
            # tail: sum_{n >= 1} c_m(n) q^n; principal and constant dropped
            acc = 0j
            for idx in range(len(series.coeffs) - 1, -series.n_min, -1):
                acc = acc * q + series.coeffs[idx]
            acc *= q
            value = acc
        else:
            acc = 0j
            for coef in reversed(series.coeffs):
                acc = acc * q + coef
            value = acc * q ** series.n_min
        total += value / _heegner_weight(Q.a, Q.b, Q.c)
    if abs(total.imag) > 1e-6 * max(1.0, abs(total.real)):
        raise AccuracyError(f"deviation sum has imaginary part {total.imag}")
    return total.real
