"""Closed-geodesic cycle integrals and regularized surface integrals of the
Faber basis j_m, in both directions of the exact identities:

- cycle side: the character-twisted sum over classes of integrals of j_m
  along closed geodesics equals a length main term plus the conditionally
  convergent series over 4 | c of T_m(d',d;c) sin(4 pi m sqrt(D) / c);
- surface side (d < 0): the character-twisted sum of regularized surface
  integrals of j_m nu_Q equals a class-number main term plus (1/pi) times
  the series with kernel f(x) = Ci(2x) sin x - Si(2x) cos x + log 2 sin x
  (sign fixed against the direct quadrature; see surface_trace).

Trace values are reported with respect to the arclength measure
|dz| / (2 pi y), the normalization of the reference numerical values
(Tr_5(j_1) = -11.5417...); with this convention the cycle identity reads

    value = -(24 / 2 pi) delta_d sigma_1(m) L_D
            + sum over 4 | c of T_m(d',d;c) sin(4 pi m sqrt(D) / c)

where L_D is the total geodesic length 2 h(D) log eps_D.

Direct evaluations use composite Gauss-Legendre quadrature along
z(theta) = center + radius e^{i theta} (arclength element d theta / sin
theta) and, on the surface side, an exact decomposition of nu_Q into
signed geodesic-disk indicators."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterator

import mpmath
import numpy as np

from .errors import (
    AccuracyError,
    AdmissibilityError,
    DegeneratePositionError,
    DomainError,
    ModeError,
)
from .kloosterman import weyl_sum
from .modforms import (
    _series_cutoff,
    eval_jm,
    jm_coefficients,
    reduce_to_fundamental_domain,
)
from .ntheory import delta_d, sigma_int
from .quadforms import (
    FormCycle,
    GenusCharacterSpec,
    QuadForm,
    cycle_index,
    fundamental_automorph,
    genus_character,
    reduced_forms_imaginary,
    total_geodesic_length,
    zagier_cycles,
)

DOUBLE_MODE_LIMIT = 8.0  # largest m sqrt(D) served in double precision
TWO_PI = 2 * math.pi


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class GeodesicSegment:
    """An arc of a geodesic semicircle, z(theta) = center + radius e^{i
    theta} for theta_start <= theta <= theta_end, with arclength element
    d theta / sin theta. The full semicircle (theta in (0, pi)) has
    endpoints center +- radius on the real line, the roots of the defining
    form."""

    center: float
    radius: float
    theta_start: float
    theta_end: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise AdmissibilityError("segment needs a positive radius")
        if not 0 < self.theta_start < self.theta_end < math.pi:
            raise AdmissibilityError("segment needs 0 < theta_start < theta_end < pi")

    @classmethod
    def for_cycle(cls, cycle: FormCycle, start_index: int = 0) -> "GeodesicSegment":
        """The closed geodesic of a class, traversed once: one full period
        of hyperbolic length L = 2 log eps_D along the chosen form's
        semicircle. The window is anchored where the reduced height (and
        so |j_m|) is smallest: with the exponential apex peak interior to
        the window, rounding of the period costs only |integrand at the
        endpoints| times ulp instead of the peak value times ulp. When the
        anchored window would run too deep into the cusp of this
        parametrization it falls back to the apex-centered window."""
        form = cycle.forms[start_index % len(cycle.forms)]
        length = cycle.length()
        radius = math.sqrt(form.disc) / (2 * abs(form.a))
        u0 = _low_anchor(form, length)
        if u0 >= 0:
            # same anchor point one period earlier, so the window straddles
            # the apex at u = 0 and |u| stays below one period
            u0 -= length
        if radius / math.cosh(max(-u0, u0 + length)) < 1e-6:
            u0 = -length / 2
        # theta(u) = 2 atan(e^u) (the apex sits at u = 0): atan keeps the
        # endpoint angles strictly inside (0, pi) far longer than acos
        return cls(
            center=-form.b / (2 * form.a),
            radius=radius,
            theta_start=2 * math.atan(math.exp(u0)),
            theta_end=2 * math.atan(math.exp(u0 + length)),
        )

    @property
    def length(self) -> float:
        """Hyperbolic arclength: integral of d theta / sin theta."""
        return math.log(
            math.tan(self.theta_end / 2) / math.tan(self.theta_start / 2)
        )

    def point(self, theta: float) -> complex:
        return complex(
            self.center + self.radius * math.cos(theta),
            self.radius * math.sin(theta),
        )

    def point_at_arclength(self, u: float) -> complex:
        theta = 2 * math.atan(math.tan(self.theta_start / 2) * math.exp(u))
        return self.point(theta)


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre parameters for geodesic integrals. Both schemes drive
    the same composite rule; adaptive_gauss doubles the panel count until
    successive refinements differ by at most abs_tol, composite_gauss is an
    alias for the same refinement loop."""

    scheme: str = "composite_gauss"
    abs_tol: float = 1e-8
    max_nodes: int = 262144
    precision_mode: str = "double"

    def __post_init__(self) -> None:
        if self.scheme not in ("composite_gauss", "adaptive_gauss"):
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")
        if self.precision_mode not in ("double", "extended"):
            raise ModeError(f"unknown precision mode {self.precision_mode!r}")
        if self.abs_tol <= 0 or self.max_nodes < 8:
            raise DomainError("quadrature needs abs_tol > 0 and max_nodes >= 8")


@dataclass(frozen=True)
class TraceReport:
    """Outcome of a trace computation: value = main_term + residual, with
    cutoff_or_tol recording the series cutoff X or the quadrature
    tolerance. Series methods also carry tail_estimate, an empirical
    partial-summation estimate of the truncated tail (None for direct
    quadrature, whose error is bounded by cutoff_or_tol itself)."""

    D: int
    d: int
    m: int
    method: str
    value: float
    main_term: float
    residual: float
    cutoff_or_tol: float
    tail_estimate: float | None = None


# ---------------------------------------------------------------------------
# The surface kernel f(x) = Ci(2x) sin x - Si(2x) cos x + log 2 sin x

_EULER_GAMMA = 0.5772156649015328606


def _si_ci_series(t: float) -> tuple[float, float]:
    """(Si(t), Ci(t)) by Maclaurin series; accurate for 0 < t <= 8."""
    si = 0.0
    term = t
    k = 0
    while abs(term) > 1e-18 * (1 + abs(si)):
        si += term / (2 * k + 1)
        # term holds t^(2k+1) / (2k+1)!
        term *= -t * t / ((2 * k + 2) * (2 * k + 3))
        k += 1
        if k > 200:
            raise AccuracyError(f"Si series failed to converge at t = {t}")
    ci = _EULER_GAMMA + math.log(t)
    term = 1.0
    k = 1
    while True:
        # term becomes (-1)^k t^(2k) / (2k)!
        term *= -t * t / ((2 * k - 1) * (2 * k))
        ci += term / (2 * k)
        if abs(term) < 1e-18 * (1 + abs(ci)):
            break
        k += 1
        if k > 200:
            raise AccuracyError(f"Ci series failed to converge at t = {t}")
    return si, ci


def _e1_imaginary(t: float, max_iter: int = 400) -> complex:
    """E_1(i t) for t > 0 by the modified Lentz continued fraction."""
    z = 1j * t
    b = z + 1
    c = 1e290 + 0j
    d = 1 / b
    h = d
    for i in range(1, max_iter + 1):
        a = -float(i * i)
        b = b + 2
        d = 1 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1) < 1e-16:
            return h * cmath.exp(-z)
    raise AccuracyError(f"continued fraction for E1({z}) did not converge")


def _si_ci(t: float) -> tuple[float, float]:
    if t <= 0:
        raise DomainError("Si/Ci evaluation requires t > 0")
    if t <= 8:
        return _si_ci_series(t)
    e1 = _e1_imaginary(t)
    # E_1(it) = -Ci(t) + i (Si(t) - pi/2)
    ci = -e1.real
    si = math.pi / 2 + e1.imag
    return si, ci


def kernel_f(x: float) -> float:
    """f(x) = Ci(2x) sin x - Si(2x) cos x + log 2 sin x, for x > 0.

    Bounded, with f(x) -> 0 like x |log x| as x -> 0+."""
    if x <= 0:
        raise DomainError("kernel_f requires x > 0")
    si, ci = _si_ci(2 * x)
    return ci * math.sin(x) - si * math.cos(x) + math.log(2) * math.sin(x)


# ---------------------------------------------------------------------------
# Gauss-Legendre machinery

_GL_ORDER = 16
_MP_NODE_CACHE: dict[tuple[int, int], tuple[list, list]] = {}


def _mp_gauss_legendre(n: int, dps: int) -> tuple[list, list]:
    """Nodes and weights of n-point Gauss-Legendre on [-1, 1] at dps digits,
    by Newton iteration on the Legendre recurrence. Cached per (n, dps)."""
    key = (n, dps)
    if key in _MP_NODE_CACHE:
        return _MP_NODE_CACHE[key]
    with mpmath.workdps(dps + 10):
        nodes, weights = [], []
        for i in range(n):
            x = mpmath.mpf(math.cos(math.pi * (i + 0.75) / (n + 0.5)))
            for _ in range(100):
                p0, p1 = mpmath.mpf(1), x
                for k in range(2, n + 1):
                    p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < mpmath.mpf(10) ** (-dps - 5):
                    break
            p0, p1 = mpmath.mpf(1), x
            for k in range(2, n + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = n * (x * p1 - p0) / (x * x - 1)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    _MP_NODE_CACHE[key] = (nodes, weights)
    return nodes, weights


def _low_anchor(form: QuadForm, length: float) -> float:
    """Apex-centered arclength coordinate of (approximately) the lowest
    reduced height over one period of the closed geodesic through form's
    semicircle. Integration windows start and end there: j_m is smallest
    at that point, so the window endpoints (whose placement inherits the
    rounding of the period) sit where the integrand is cheapest, instead
    of splitting the e^{2 pi m sqrt(D)/2} apex peak."""
    center = -form.b / (2 * form.a)
    r = math.sqrt(form.disc) / (2 * abs(form.a))
    steps = max(64, 16 * math.ceil(length))
    best_u = -length / 2
    best_h = math.inf
    for i in range(steps):
        u = -length / 2 + (i + 0.5) * length / steps
        z = complex(center - r * math.tanh(u), r / math.cosh(u))
        if z.imag <= 2e-8:
            continue
        h = reduce_to_fundamental_domain(z).z.imag
        if h < best_h:
            best_h = h
            best_u = u
    return best_u


def _integrate_arclength(
    fn: Callable[[complex], complex],
    seg: GeodesicSegment,
    quad: QuadratureSpec,
) -> complex:
    """Integral of fn along the segment with respect to |dz|/y, by
    panel-doubling composite Gauss-Legendre in the arclength parameter."""
    nodes, weights = np.polynomial.legendre.leggauss(_GL_ORDER)
    length = seg.length
    panels = max(4, math.ceil(length))
    previous = None
    used = 0
    while True:
        used += panels * _GL_ORDER
        if used > quad.max_nodes:
            raise AccuracyError(
                f"node budget {quad.max_nodes} exhausted at panel count {panels}"
            )
        total = 0j
        h = length / panels
        for p in range(panels):
            mid = (p + 0.5) * h
            for x, w in zip(nodes, weights):
                total += w * fn(seg.point_at_arclength(mid + (h / 2) * x))
        total *= h / 2
        if previous is not None and abs(total - previous) <= quad.abs_tol:
            return total
        previous = total
        panels *= 2


def _dps_for(m: int, radius: float, tol: float) -> int:
    digits = 0.4343 * (TWO_PI * m * radius) + max(0.0, -math.log10(tol)) + 12
    return max(30, 10 * math.ceil(digits / 10))


def _cycle_integral_complex(
    cycle: FormCycle,
    m: int,
    quad: QuadratureSpec,
    start_index: int = 0,
    cache_dir: str | Path | None = None,
) -> complex:
    """Integral of j_m over one closed class geodesic with respect to
    |dz| / (2 pi y), before any reality reduction."""
    if m < 1:
        raise DomainError("cycle integrals require m >= 1")
    form = cycle.forms[start_index % len(cycle.forms)]
    D = form.disc
    if quad.precision_mode == "double":
        if m * math.sqrt(D) > DOUBLE_MODE_LIMIT:
            raise ModeError(
                f"m sqrt(D) = {m * math.sqrt(D):.2f} exceeds {DOUBLE_MODE_LIMIT}: "
                "j_m reaches beyond double-precision headroom on this geodesic; "
                "use precision_mode='extended'"
            )
        seg = GeodesicSegment.for_cycle(cycle, start_index)
        point_tol = quad.abs_tol / max(8.0, 4 * seg.length)
        value = _integrate_arclength(
            lambda z: eval_jm(m, z, mode="double", tol=point_tol, cache_dir=cache_dir),
            seg,
            quad,
        )
        return value / TWO_PI
    return _cycle_integral_extended(cycle, m, quad, start_index, cache_dir) / TWO_PI


def _cycle_integral_extended(
    cycle: FormCycle,
    m: int,
    quad: QuadratureSpec,
    start_index: int,
    cache_dir: str | Path | None,
) -> complex:
    form = cycle.forms[start_index % len(cycle.forms)]
    # dps must cover the whole cycle's peak height, which can reach
    # sqrt(D)/2 on another form of the cycle even when the starting form's
    # own apex sqrt(D)/(2|a|) is lower
    dps = _dps_for(m, math.sqrt(form.disc) / 2, quad.abs_tol)
    nodes, weights = _mp_gauss_legendre(_GL_ORDER, dps)
    length = cycle.length()
    g = form.content
    pell = fundamental_automorph(form.disc // (g * g))
    point_tol = quad.abs_tol / max(8.0, 4 * length)
    panels = max(4, math.ceil(length))
    previous = None
    used = 0
    with mpmath.workdps(dps):
        r = mpmath.sqrt(form.disc) / (2 * abs(form.a))
        center = mpmath.mpf(-form.b) / (2 * form.a)
        # the period must carry working precision: a double-rounded length
        # misplaces the far window endpoint by |integrand there| * ulp(length),
        # and the integrand can reach e^(2 pi m sqrt(D)/2). With the period
        # exact, that product stays below tol because the dps budget above
        # covers the peak, so a centered window is safe and keeps |u|, hence
        # the cusp depth r / cosh(u), as mild as one period allows
        mp_len = 2 * mpmath.log((pell.t + pell.u * mpmath.sqrt(pell.D)) / 2)
        while True:
            used += panels * _GL_ORDER
            if used > quad.max_nodes:
                raise AccuracyError(
                    f"node budget {quad.max_nodes} exhausted at panel count {panels}"
                )
            total = mpmath.mpc(0)
            h = mp_len / panels
            for p in range(panels):
                mid = -mp_len / 2 + (p + mpmath.mpf(1) / 2) * h
                for x, w in zip(nodes, weights):
                    u = mid + (h / 2) * x
                    z = mpmath.mpc(center - r * mpmath.tanh(u), r / mpmath.cosh(u))
                    total += w * eval_jm(
                        m, z, mode="extended", tol=point_tol, cache_dir=cache_dir
                    )
            total *= h / 2
            if previous is not None and abs(total - previous) <= quad.abs_tol:
                return complex(total)
            previous = total
            panels *= 2


def class_cycle_integral(
    cycle: FormCycle,
    m: int,
    spec: QuadratureSpec | None = None,
    start_index: int = 0,
    cache_dir: str | Path | None = None,
) -> float:
    """Integral of j_m over the closed geodesic of one class with respect
    to |dz| / (2 pi y); the imaginary part is checked small and discarded.
    For D = 5 and m = 1 this is the full trace -11.5417..."""
    spec = spec or QuadratureSpec()
    value = _cycle_integral_complex(cycle, m, spec, start_index, cache_dir)
    scale = max(1.0, abs(value))
    if abs(value.imag) > max(10 * spec.abs_tol, 1e-8 * scale):
        raise AccuracyError(
            f"class integral has imaginary part {value.imag}; "
            "the class combination, not a single class, is guaranteed real"
        )
    return value.real


# ---------------------------------------------------------------------------
# Cycle traces


def _character_spec(D: int, d: int) -> GenusCharacterSpec:
    if d == 0 or D % d:
        raise AdmissibilityError(f"{d} does not divide {D}")
    return GenusCharacterSpec(D=D, d=d, d_prime=D // d)


def _kernel_series(
    m: int,
    spec: GenusCharacterSpec,
    X: float,
    sqrt_method: str,
    kernel: Callable[[float], float],
    char_bound: int = 50,
) -> tuple[float, float]:
    """Sum T_m(d',d;c) kernel(4 pi m sqrt(D) / c) over 4 | c <= X.

    Returns (sum, tail_estimate). The tail estimate comes from partial
    summation: with S(t) = sum_{c <= t} T/sqrt(c), the tail is
    -S(X) sqrt(X) K(X) - integral of S(t) (sqrt(t) K(t))' dt, so it is
    bounded by the observed sup of |S| over the last octave times
    sqrt(X)|K(A/X)| + c_K A/sqrt(X), A = 4 pi m sqrt(D). The kernel
    constant c_K covers |(sqrt(t) K(A/t))'| integrated: 3 for sin
    (|sin u| <= u), 3 |log(4A/X)| + 14 for the Ci/Si kernel (whose small
    argument behavior is u log u)."""
    A = 4 * math.pi * m * math.sqrt(spec.D)
    acc = 0.0
    s_partial = 0.0
    s_sup = 0.0
    octave = X / 2
    c = 4
    while c <= X:
        t = weyl_sum(m, spec, c, sqrt_method=sqrt_method, char_bound=char_bound)
        if t:
            acc += t * kernel(A / c)
            s_partial += t / math.sqrt(c)
        if c >= octave:
            s_sup = max(s_sup, abs(s_partial))
        c += 4
    s_sup = max(s_sup, abs(s_partial))
    if kernel is math.sin:
        c_k = 3.0
    else:
        c_k = 3.0 * abs(math.log(4 * A / X)) + 14.0
    tail = s_sup * (math.sqrt(X) * abs(kernel(A / X)) + c_k * A / math.sqrt(X))
    return acc, tail


def trace_cycle(
    D: int,
    d: int,
    m: int,
    method: str = "direct",
    X: float | None = None,
    quad: QuadratureSpec | None = None,
    sqrt_method: str = "crt",
    cache_dir: str | Path | None = None,
) -> TraceReport:
    """The character-twisted sum of cycle integrals of j_m over the classes
    of discriminant D = d d' (d fundamental), with respect to
    |dz| / (2 pi y).

    method 'direct': Gauss-Legendre quadrature class by class; exact zero
    for d < 0, where reflection pairs classes with opposite characters.
    method 'series': main term -(24 / 2 pi) delta_d sigma_1(m) L_D plus
    sum over 4 | c <= X of T_m(d',d;c) sin(4 pi m sqrt(D) / c)."""
    spec = _character_spec(D, d)
    if m < 1:
        raise DomainError("trace_cycle requires m >= 1")
    main = -24.0 * delta_d(d) * sigma_int(m, 1) * total_geodesic_length(D) / TWO_PI
    if method == "direct":
        quad = quad or QuadratureSpec()
        if d < 0:
            # the reflection Q -> Q' preserves cycle integrals and flips
            # chi_d for negative d: the combination vanishes identically
            return TraceReport(D, d, m, "direct", 0.0, 0.0, 0.0, quad.abs_tol)
        total = 0j
        for cyc in zagier_cycles(D):
            chi = genus_character(spec, cyc.forms[0])
            if chi == 0:
                continue
            total += chi * _cycle_integral_complex(cyc, m, quad, 0, cache_dir)
        scale = max(1.0, abs(total))
        if abs(total.imag) > 1e-6 * scale:
            raise AccuracyError(f"cycle trace has imaginary part {total.imag}")
        value = total.real
        return TraceReport(D, d, m, "direct", value, main, value - main, quad.abs_tol)
    if method != "series":
        raise DomainError(f"unknown trace method {method!r}")
    if X is None or X < 4:
        raise DomainError("series method requires a cutoff X >= 4")
    residual, tail = _kernel_series(m, spec, X, sqrt_method, math.sin)
    return TraceReport(
        D, d, m, "series", main + residual, main, residual, float(X), tail
    )


# ---------------------------------------------------------------------------
# Winding numbers and their masses


def _forms_through_height(D: int, height: float) -> Iterator[QuadForm]:
    """All integral forms of discriminant D whose geodesic semicircle
    reaches above the given height and overlaps |x| <= 1/2."""
    sq = math.sqrt(D)
    a_max = int(sq / (2 * height))
    for a in range(-a_max, a_max + 1):
        if a == 0:
            continue
        r = sq / (2 * abs(a))
        # center -b/2a must satisfy |center| <= 1/2 + r
        bound = (0.5 + r) * 2 * abs(a)
        for b in range(math.ceil(-bound), math.floor(bound) + 1):
            if (b * b - D) % (4 * a):
                continue
            yield QuadForm(a, b, (b * b - D) // (4 * a))


def _circle_position(z: complex, Q: QuadForm) -> int:
    """-1 strictly inside the geodesic semicircle of Q, +1 strictly
    outside; degenerate positions raise."""
    center = -Q.b / (2 * Q.a)
    r2 = Q.disc / (4 * Q.a * Q.a)
    dist2 = (z.real - center) ** 2 + z.imag**2
    if abs(dist2 - r2) <= 1e-9 * r2:
        raise DegeneratePositionError(
            f"{z} is on (or too near) the geodesic circle of {Q}"
        )
    return -1 if dist2 < r2 else 1


def winding_number(Q: QuadForm, z: complex) -> int:
    """nu_Q(z): the signed count of crossings of the vertical ray from z to
    i infinity with translates of the oriented geodesic of Q. The ray
    crosses the semicircle of an equivalent form P exactly when z lies
    inside it, with sign sgn(a_P). Zero whenever Im z > sqrt(D)/2."""
    D = Q.disc
    if D <= 0 or math.isqrt(D) ** 2 == D:
        raise AdmissibilityError(f"{Q} does not have positive nonsquare discriminant")
    if z.imag <= 0:
        raise DomainError("winding_number requires Im z > 0")
    if 2 * z.imag > math.sqrt(D):
        return 0
    own_class = cycle_index(Q)
    total = 0
    for P in _forms_through_height(D, z.imag):
        if _circle_position(z, P) < 0 and cycle_index(P) == own_class:
            total += 1 if P.a > 0 else -1
    return total


@lru_cache(maxsize=64)
def _weighted_disks(D: int, d: int, bound: int) -> tuple[tuple[float, float, int], ...]:
    """(center, radius^2, chi_d sgn(a)) for every discriminant-D form whose
    geodesic circle reaches the fundamental domain and carries a nonzero
    character; the character-weighted total winding number at z is the sum
    of weights over disks strictly containing z."""
    spec = _character_spec(D, d)
    disks = []
    for P in _forms_through_height(D, math.sqrt(3) / 2):
        chi = genus_character(spec, P, bound=bound)
        if chi:
            disks.append(
                (-P.b / (2 * P.a), D / (4 * P.a * P.a), chi if P.a > 0 else -chi)
            )
    return tuple(disks)


def _winding_total(z: complex, spec: GenusCharacterSpec, bound: int = 50) -> int:
    """sum over all classes Q of chi_d(Q) nu_Q(z), computed as a single
    pass over all discriminant-D forms whose circles contain z."""
    total = 0
    x, y2 = z.real, z.imag * z.imag
    for center, r2, weight in _weighted_disks(spec.D, spec.d, bound):
        dist2 = (x - center) ** 2 + y2
        if abs(dist2 - r2) <= 1e-9 * r2:
            raise DegeneratePositionError(f"{z} is on (or too near) a geodesic circle")
        if dist2 < r2:
            total += weight
    return total


def nu_mass(
    D: int,
    d: int,
    base: int = 64,
    depth: int = 5,
    bound: int = 50,
) -> float:
    """(1/4pi) times the character-twisted surface integral of the winding
    numbers: midpoint counts on a rectangular grid in (x, 1/y) coordinates
    (where the hyperbolic cell measure is exactly width times height),
    refined adaptively where samples disagree. For d < 0 the exact value
    is h(d) h(d') / (omega_d omega_d'); for d > 0 the mass vanishes and
    0.0 is returned without quadrature."""
    spec = _character_spec(D, d)
    if d > 0:
        return 0.0
    sq = math.sqrt(D)
    v_lo = 2 / sq  # above the tallest circle every winding number vanishes
    v_hi = 2 / math.sqrt(3)  # domain floor y = sqrt(3)/2

    def sample(x: float, v: float) -> int:
        z = complex(x, 1 / v)
        if abs(z) < 1:  # below the unit circle: not in the fundamental domain
            return 0
        for attempt in range(6):
            try:
                return _winding_total(z, spec, bound=bound)
            except DegeneratePositionError:
                # nudge off the circle; a measure-zero correction
                z = complex(z.real + (attempt + 1) * 3e-9, z.imag + 2e-9)
        return 0

    total = 0.0
    dx = 1.0 / base
    dv = (v_hi - v_lo) / base
    stack: list[tuple[float, float, float, float, int]] = []
    for i in range(base):
        for k in range(base):
            stack.append((-0.5 + i * dx, v_lo + k * dv, dx, dv, 0))
    while stack:
        x0, v0, w, h, level = stack.pop()
        mid = sample(x0 + w / 2, v0 + h / 2)
        if level >= depth:
            total += mid * w * h
            continue
        corners = {
            sample(x0 + w / 4, v0 + h / 4),
            sample(x0 + 3 * w / 4, v0 + h / 4),
            sample(x0 + w / 4, v0 + 3 * h / 4),
            sample(x0 + 3 * w / 4, v0 + 3 * h / 4),
        }
        if corners == {mid}:
            total += mid * w * h
            continue
        for ix in (0, 1):
            for iv in (0, 1):
                stack.append(
                    (x0 + ix * w / 2, v0 + iv * h / 2, w / 2, h / 2, level + 1)
                )
    return total / (4 * math.pi)


def nu_mass_exact(D: int, d: int) -> float:
    """The closed form h(d) h(d') / (omega_d omega_d') for d < 0, and 0.0
    for d > 0."""
    spec = _character_spec(D, d)
    if d > 0:
        return 0.0
    neg = reduced_forms_imaginary(d)
    negp = reduced_forms_imaginary(spec.d_prime)
    return (neg.h * negp.h) / (neg.omega * negp.omega)


# ---------------------------------------------------------------------------
# Surface integrals: exact disk decomposition


def _disk_breakpoints(x0: float, r: float) -> list[float]:
    ys = {math.sqrt(3) / 2, r}
    if math.sqrt(3) / 2 < 1.0 < r:
        ys.add(1.0)
    for edge in (x0 + 0.5, x0 - 0.5):
        if abs(edge) < r:
            y = math.sqrt(r * r - edge * edge)
            if y > math.sqrt(3) / 2:
                ys.add(y)
    if x0:
        # intersection of the unit circle with the disk boundary
        xs = (1 + x0 * x0 - r * r) / (2 * x0)
        if abs(xs) < 1:
            y = math.sqrt(1 - xs * xs)
            if math.sqrt(3) / 2 < y < min(r, 1.0):
                ys.add(y)
    lo = math.sqrt(3) / 2
    return sorted(y for y in ys if lo <= y <= r)


def _x_intervals(y: float, x0: float, r: float) -> list[tuple[float, float]]:
    s = math.sqrt(max(r * r - y * y, 0.0))
    lo, hi = max(-0.5, x0 - s), min(0.5, x0 + s)
    if lo >= hi:
        return []
    if y >= 1:
        return [(lo, hi)]
    g = math.sqrt(1 - y * y)
    out = []
    if lo < -g:
        out.append((lo, min(hi, -g)))
    if hi > g:
        out.append((max(lo, g), hi))
    return out


def _disk_domain_integral(
    m: int,
    form: QuadForm,
    tol: float,
    cache_dir: str | Path | None = None,
    max_panel_splits: int = 14,
) -> complex:
    """Integral of j_m over (fundamental domain) intersect (interior of the
    geodesic semicircle of the form), with respect to dx dy / y^2. The
    x-integral of each q-expansion term is analytic; the remaining y
    integral is composite Gauss-Legendre between geometry breakpoints."""
    D = form.disc
    x0 = -form.b / (2 * form.a)
    r = math.sqrt(D) / (2 * abs(form.a))
    floor = math.sqrt(3) / 2
    if r <= floor or x0 + r <= -0.5 or x0 - r >= 0.5:
        return 0j
    n_cut = _series_cutoff(m, floor, tol)
    series = jm_coefficients(m, n_cut, cache_dir)
    terms = [
        (n, series.coeff(n))
        for n in range(series.n_min, series.n_max + 1)
        if series.coeff(n)
    ]

    def integrand(y: float) -> complex:
        intervals = _x_intervals(y, x0, r)
        if not intervals:
            return 0j
        acc = 0j
        for n, cn in terms:
            decay = math.exp(-2 * math.pi * n * y)
            piece = 0j
            for lo, hi in intervals:
                piece += (
                    cmath.exp(2j * math.pi * n * hi) - cmath.exp(2j * math.pi * n * lo)
                ) / (2j * math.pi * n)
            acc += cn * decay * piece
        return acc / (y * y)

    nodes, weights = np.polynomial.legendre.leggauss(_GL_ORDER)
    breaks = _disk_breakpoints(x0, r)
    total = 0j
    for seg_lo, seg_hi in zip(breaks, breaks[1:]):
        width = seg_hi - seg_lo
        if width < 1e-14:
            continue
        # map y = lo + width sin^2(pi s / 2): the vanishing derivative at
        # both endpoints flattens the sqrt singularities where the disk
        # apex or the unit-circle gap pinches the x-interval shut
        panels = 1
        prev = None
        for _ in range(max_panel_splits):
            acc = 0j
            h = 1.0 / panels
            for p in range(panels):
                mid = (p + 0.5) * h
                for x, w in zip(nodes, weights):
                    s = mid + (h / 2) * x
                    half = math.sin(math.pi * s / 2)
                    y = seg_lo + width * half * half
                    jac = width * (math.pi / 2) * math.sin(math.pi * s)
                    acc += w * jac * integrand(y)
            acc *= h / 2
            if prev is not None and abs(acc - prev) <= tol / max(2, len(breaks)):
                break
            prev = acc
            panels *= 2
        else:
            raise AccuracyError(
                f"panel refinement stalled on [{seg_lo}, {seg_hi}] for {form}"
            )
        total += acc
    return total


def surface_direct_value(
    D: int,
    d: int,
    m: int,
    tol: float = 1e-4,
    bound: int = 50,
    cache_dir: str | Path | None = None,
) -> float:
    """(1/4pi) sum over classes of chi_d(Q) times the regularized surface
    integral of j_m nu_Q, evaluated as a signed sum over all
    discriminant-D forms whose geodesic disks meet the fundamental
    domain."""
    spec = _character_spec(D, d)
    if d >= 0:
        raise DomainError("the direct surface integral requires d < 0")
    if m < 1:
        raise DomainError("surface_direct_value requires m >= 1")
    total = 0j
    floor = math.sqrt(3) / 2
    for Q in _forms_through_height(D, floor):
        chi = genus_character(spec, Q, bound=bound)
        if chi == 0:
            continue
        piece = _disk_domain_integral(m, Q, tol, cache_dir)
        if piece:
            total += chi * (1 if Q.a > 0 else -1) * piece
    scale = max(1.0, abs(total))
    if abs(total.imag) > 1e-5 * scale:
        raise AccuracyError(f"surface integral has imaginary part {total.imag}")
    return total.real / (4 * math.pi)


def surface_trace(
    D: int,
    d: int,
    m: int,
    method: str = "surface_series",
    X: float | None = None,
    tol: float = 1e-4,
    sqrt_method: str = "crt",
    bound: int = 50,
    cache_dir: str | Path | None = None,
) -> TraceReport:
    """The character-twisted regularized surface integrals of j_m.

    For d > 0 the combination is identically zero (the reflection reverses
    the surface orientation) and an exact-zero report is returned. For
    d < 0: method 'surface_series' is the main term -24 sigma_1(m)
    h(d)h(d')/(omega_d omega_d') plus (1/pi) sum over 4 | c <= X of
    T_m(d',d;c) f(4 pi m sqrt(D)/c); method 'surface_direct' is the disk
    decomposition quadrature.

    The sign of the kernel series is fixed by cross-validation against
    the direct quadrature (and the exact mass identity that anchors its
    orientation): with f as defined above, the series enters with +1/pi.
    Checked for (D, d) = (21, -3), (33, -3), (77, -7) at X = 1e5, where
    the two methods then agree to a few times 1e-2 (the conditional
    series tail), while the opposite sign is off by 4 to 18."""
    _character_spec(D, d)
    if m < 1:
        raise DomainError("surface_trace requires m >= 1")
    if method not in ("surface_series", "surface_direct"):
        raise DomainError(f"unknown surface method {method!r}")
    if d > 0:
        cutoff = float(X) if (method == "surface_series" and X) else tol
        return TraceReport(D, d, m, method, 0.0, 0.0, 0.0, cutoff)
    main = -24.0 * sigma_int(m, 1) * nu_mass_exact(D, d)
    if method == "surface_direct":
        value = surface_direct_value(D, d, m, tol=tol, bound=bound, cache_dir=cache_dir)
        return TraceReport(D, d, m, method, value, main, value - main, tol)
    if X is None or X < 4:
        raise DomainError("series method requires a cutoff X >= 4")
    spec = _character_spec(D, d)
    acc, tail = _kernel_series(m, spec, X, sqrt_method, kernel_f, char_bound=bound)
    value = main + acc / math.pi
    return TraceReport(
        D, d, m, method, value, main, value - main, float(X), tail / math.pi
    )


# ---------------------------------------------------------------------------
# Asymptotic scans


def asymptotic_scan(
    D_values: list[int],
    m: int = 1,
    d: int = 1,
    X: float = 1e5,
    sqrt_method: str = "crt",
) -> list[dict]:
    """Series-method trace reports across discriminants, with the residual
    normalizations used to study the error-term decay. Each row also
    carries the fluctuation of the partial sums over the last octave of
    moduli as an empirical convergence estimate; per-discriminant failures
    are recorded in the row rather than aborting the scan."""
    rows = []
    for D in D_values:
        try:
            spec = _character_spec(D, d)
            sq = math.sqrt(D)
            main = (
                -24.0 * delta_d(d) * sigma_int(m, 1) * total_geodesic_length(D) / TWO_PI
            )
            acc = 0.0
            octave = max(4, 4 * (int(X / 2) // 4))
            tail_lo = math.inf
            tail_hi = -math.inf
            s_partial = 0.0
            s_sup = 0.0
            A = 4 * math.pi * m * sq
            c = 4
            while c <= X:
                t = weyl_sum(m, spec, c, sqrt_method=sqrt_method)
                if t:
                    acc += t * math.sin(A / c)
                    s_partial += t / math.sqrt(c)
                if c >= octave:
                    tail_lo = min(tail_lo, acc)
                    tail_hi = max(tail_hi, acc)
                    s_sup = max(s_sup, abs(s_partial))
                c += 4
            s_sup = max(s_sup, abs(s_partial))
            tail = s_sup * (math.sqrt(X) * abs(math.sin(A / X)) + 3.0 * A / math.sqrt(X))
            value = main + acc
        except (ValueError, ArithmeticError) as exc:
            rows.append({"D": D, "d": d, "m": m, "method": "series", "error": str(exc)})
            continue
        rows.append(
            {
                "D": D,
                "d": d,
                "m": m,
                "method": "series",
                "value": value,
                "main_term": main,
                "residual": acc,
                "cutoff_or_tol": float(X),
                "tail_estimate": tail,
                "tail_fluctuation": tail_hi - tail_lo,
                "residual_over_main": abs(acc) / abs(main) if main else math.inf,
                "residual_over_Dpow": acc / D ** (13 / 27),
            }
        )
    return rows
