"""Plus-space Kloosterman sums, theta-multiplier cusp sums, quadratic Weyl
sums, Kohnen's identity, the fast evaluation path, and partial-sum streams."""

from __future__ import annotations

import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modtraces.errors import AdmissibilityError, DomainError, ResourceError
from modtraces.kloosterman import (
    KloostermanFamily,
    KloostermanQuery,
    WeylFamily,
    partial_sum_stream,
    s_plus,
    s_plus_fast,
    s_plus_table,
    s_plus_value,
    s_theta_infinity,
    sqrt_mod,
    weil_bound,
    weyl_sum,
    weyl_via_kohnen,
)
from modtraces.ntheory import WEIGHT_MINUS, WEIGHT_PLUS
from modtraces.quadforms import GenusCharacterSpec

SQRT8 = 2 * math.sqrt(2)


def _admissible(wt, v: int) -> bool:
    return (wt.sign * v) % 4 in (0, 1)


def test_s_plus_examples() -> None:
    assert s_plus(KloostermanQuery(WEIGHT_PLUS, 1, 1, 4)) == pytest.approx(-SQRT8, abs=1e-12)
    assert s_plus(KloostermanQuery(WEIGHT_MINUS, 3, 3, 4)) == pytest.approx(-SQRT8, abs=1e-12)
    with pytest.raises(AdmissibilityError):
        KloostermanQuery(WEIGHT_PLUS, 2, 1, 4)


def test_s_theta_infinity_examples() -> None:
    assert s_theta_infinity(0, 4, 4, WEIGHT_PLUS) == pytest.approx(1 + 1j, abs=1e-12)
    assert s_theta_infinity(0, 4, 8, WEIGHT_PLUS) == pytest.approx(0, abs=1e-12)
    assert s_theta_infinity(0, 0, 4, WEIGHT_PLUS) == pytest.approx(1 + 1j, abs=1e-12)
    with pytest.raises(AdmissibilityError):
        s_theta_infinity(0, 4, 6, WEIGHT_PLUS)


def test_s_theta_infinity_defining_sum() -> None:
    # independent re-evaluation straight from the definition
    from modtraces.ntheory import eps_factor, kronecker

    for (m, n, c) in ((1, 5, 12), (0, 13, 16), (3, 7, 20)):
        expected = 0j
        for d in range(1, c):
            if d % 2 == 0 or math.gcd(d, c) != 1:
                continue
            dbar = pow(d, -1, c)
            expected += (
                kronecker(c, d)
                * eps_factor(d)
                * cmath.exp(2j * math.pi * (m * dbar + n * d) / c)
            )
        assert s_theta_infinity(m, n, c, WEIGHT_PLUS) == pytest.approx(expected, abs=1e-10)


def test_weyl_sum_examples() -> None:
    spec55 = GenusCharacterSpec(D=5, d=5, d_prime=1)
    assert weyl_sum(1, spec55, 4) == pytest.approx(-2.0, abs=1e-12)
    spec51 = GenusCharacterSpec(D=5, d=1, d_prime=5)
    assert weyl_sum(1, spec51, 12) == 0.0
    spec21 = GenusCharacterSpec(D=21, d=-3, d_prime=-7)
    assert weyl_sum(1, spec21, 4) == pytest.approx(weyl_via_kohnen(1, spec21, 4), abs=1e-9)


def test_weyl_sum_direct_enumeration() -> None:
    # brute-force b-scan with the character evaluated per residue
    from modtraces.quadforms import QuadForm, genus_character

    spec = GenusCharacterSpec(D=21, d=-3, d_prime=-7)
    for c in (4, 8, 12, 20, 36):
        for m in (1, 2):
            expected = 0.0
            for b in range(c):
                if (b * b - 21) % c:
                    continue
                Q = QuadForm(c // 4, b, (b * b - 21) // c)
                expected += genus_character(spec, Q) * math.cos(2 * math.pi * 2 * m * b / c)
            assert weyl_sum(m, spec, c) == pytest.approx(expected, abs=1e-10), (m, c)


def test_weyl_via_kohnen_examples() -> None:
    spec = GenusCharacterSpec(D=5, d=5, d_prime=1)
    assert weyl_via_kohnen(1, spec, 4) == pytest.approx(-2.0, abs=1e-12)
    assert weyl_via_kohnen(1, spec, 4) == pytest.approx(
        s_plus_value(WEIGHT_PLUS, 1, 5, 4) / math.sqrt(2), abs=1e-12
    )
    spec21 = GenusCharacterSpec(D=21, d=-3, d_prime=-7)
    assert weyl_via_kohnen(2, spec21, 8) == pytest.approx(weyl_sum(2, spec21, 8), abs=1e-9)


def test_kohnen_identity_on_subgrid() -> None:
    # the full declared grid is exercised by the acceptance suite
    for d, d_prime in ((1, 5), (5, 1), (-3, -7)):
        spec = GenusCharacterSpec(D=d * d_prime, d=d, d_prime=d_prime)
        for m in (1, 2, 3, 4):
            for c in range(4, 101, 4):
                assert weyl_via_kohnen(m, spec, c) == pytest.approx(
                    weyl_sum(m, spec, c), abs=1e-9
                ), (d, d_prime, m, c)


def test_weil_bound_examples() -> None:
    assert weil_bound(1, 1, 4) == pytest.approx(12.0)
    assert weil_bound(1, 1, 1) == pytest.approx(2.0)
    assert weil_bound(4, 8, 4) == pytest.approx(24.0)


def test_weil_bound_and_reality_sample() -> None:
    for wt in (WEIGHT_PLUS, WEIGHT_MINUS):
        for c in range(4, 241, 4):
            for m in (1, 4, 5, 21):
                for n in (1, 5, 8, 40):
                    if not (_admissible(wt, m) and _admissible(wt, n)):
                        continue
                    value = s_plus_value(wt, m, n, c)
                    assert abs(value) <= weil_bound(m, n, c) + 1e-9


@given(
    data=st.data(),
    c=st.integers(min_value=1, max_value=100),
)
@settings(max_examples=100, deadline=None)
def test_weight_flip_identity(data, c: int) -> None:
    c = 4 * c
    wt = data.draw(st.sampled_from([WEIGHT_PLUS, WEIGHT_MINUS]))
    flip = WEIGHT_MINUS if wt is WEIGHT_PLUS else WEIGHT_PLUS
    m = data.draw(st.integers(min_value=-40, max_value=40).filter(lambda v: _admissible(wt, v)))
    n = data.draw(st.integers(min_value=-40, max_value=40).filter(lambda v: _admissible(wt, v)))
    assert s_plus_value(wt, m, n, c) == pytest.approx(
        s_plus_value(flip, -m, -n, c), abs=1e-10
    )


@given(
    data=st.data(),
    c=st.integers(min_value=1, max_value=100),
)
@settings(max_examples=100, deadline=None)
def test_symmetry_m_n(data, c: int) -> None:
    c = 4 * c
    wt = data.draw(st.sampled_from([WEIGHT_PLUS, WEIGHT_MINUS]))
    m = data.draw(st.integers(min_value=-40, max_value=40).filter(lambda v: _admissible(wt, v)))
    n = data.draw(st.integers(min_value=-40, max_value=40).filter(lambda v: _admissible(wt, v)))
    assert s_plus_value(wt, m, n, c) == pytest.approx(s_plus_value(wt, n, m, c), abs=1e-10)


def test_bulk_table_matches_scalar_path() -> None:
    ms = [1, 4, 5, 8]
    ns = [1, 5, 12, 13]
    for c in (4, 8, 20, 36, 100):
        table = s_plus_table(WEIGHT_PLUS, ms, ns, c)
        for i, m in enumerate(ms):
            for j, n in enumerate(ns):
                assert complex(table[i, j]).real == pytest.approx(
                    s_plus_value(WEIGHT_PLUS, m, n, c), abs=1e-10
                )
                assert abs(complex(table[i, j]).imag) < 1e-10


GATE_MODULI = tuple(range(4, 513, 4)) + (1020, 1024, 2048, 2052, 2740, 3980, 4096)


def test_fast_path_gate_m_zero() -> None:
    # multiplicative route gated on exact agreement with the naive sum
    for n in (5, 8, 13, 45):
        for c in GATE_MODULI:
            fast = s_plus_fast(WEIGHT_PLUS, 0, n, c)
            naive = s_plus_value(WEIGHT_PLUS, 0, n, c)
            assert fast == pytest.approx(naive, abs=1e-8 * max(1.0, math.sqrt(c))), (n, c)


def test_fast_path_gate_m_one() -> None:
    for c in GATE_MODULI:
        fast = s_plus_fast(WEIGHT_PLUS, 1, 5, c)
        naive = s_plus_value(WEIGHT_PLUS, 1, 5, c)
        assert fast == pytest.approx(naive, abs=1e-8 * max(1.0, math.sqrt(c))), c


def test_sqrt_mod_crt_matches_scan_to_1e4() -> None:
    import numpy as np

    for D in (5, 21):
        for c in range(4, 10_001, 4):
            b = np.arange(c, dtype=np.int64)
            expected = np.flatnonzero((b * b - D % c) % c == 0).tolist()
            assert sqrt_mod(D % c, c, method="crt") == expected, (D, c)


def test_stream_examples() -> None:
    family = KloostermanFamily(WEIGHT_PLUS, 1, 5)
    assert list(partial_sum_stream(family, 3.9)) == []
    records = list(partial_sum_stream(family, 4))
    assert len(records) == 1
    assert records[0].value == pytest.approx(-SQRT8 / 4, abs=1e-12)
    assert records[0].weight_mode == "inv_c"


def test_stream_sub_weil_at_1e4() -> None:
    family = KloostermanFamily(WEIGHT_PLUS, 1, 5)
    last = None
    for rec in partial_sum_stream(family, 1e4, fast=True):
        last = rec
    assert last is not None
    assert abs(last.value) < 1e4**0.45


def test_stream_cap_and_modes() -> None:
    family = KloostermanFamily(WEIGHT_PLUS, 1, 5)
    with pytest.raises(ResourceError):
        list(partial_sum_stream(family, 2e6))
    with pytest.raises(DomainError):
        list(partial_sum_stream(family, 100, weight_mode="inv_cube"))
    inv_sqrt = list(partial_sum_stream(family, 40, weight_mode="inv_sqrt_c"))
    inv_c = list(partial_sum_stream(family, 40, weight_mode="inv_c"))
    for a, b in zip(inv_sqrt, inv_c):
        assert a.term == pytest.approx(b.term * math.sqrt(a.x), abs=1e-12)


def test_weyl_family_stream() -> None:
    spec = GenusCharacterSpec(D=5, d=5, d_prime=1)
    records = list(partial_sum_stream(WeylFamily(1, spec), 20))
    assert records[0].weight_mode == "inv_sqrt_c"
    assert records[0].term == pytest.approx(-1.0, abs=1e-12)
    assert records[-1].value == pytest.approx(-1 - 2 / math.sqrt(20), abs=1e-12)
