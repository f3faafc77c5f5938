"""The j-function expansion, Faber polynomials, j_m evaluation, fundamental
domain reduction, CM traces, and the expansion cache."""

from __future__ import annotations

import json
import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import modtraces.modforms as mf
from modtraces.errors import DomainError, ModeError
from modtraces.modforms import (
    FaberPolynomial,
    cm_trace,
    cm_trace_deviation,
    cm_trace_integer_defect,
    eval_jm,
    faber_polynomial,
    j_coefficients,
    jm_coefficients,
    reduce_to_fundamental_domain,
)
from modtraces.ntheory import fundamental_discriminants


def test_j_coefficients_exact() -> None:
    assert j_coefficients(4) == (1, 744, 196884, 21493760, 864299970, 20245856256)


def test_faber_polynomials() -> None:
    assert faber_polynomial(0).coeffs == (1,)
    assert faber_polynomial(1).coeffs == (1, -744)
    assert faber_polynomial(2).coeffs == (1, -1488, 159768)
    p3 = faber_polynomial(3)
    assert p3.m == 3
    assert len(p3.coeffs) == 4
    assert p3.coeffs[0] == 1


def test_jm_series_normalization() -> None:
    for m in (1, 2, 3):
        series = jm_coefficients(m, 6)
        assert series.n_min == -m
        assert series.coeff(-m) == 1
        for e in range(-m + 1, 1):
            assert series.coeff(e) == 0, (m, e)
    assert jm_coefficients(1, 6).coeffs[2:] == j_coefficients(6)[2:]


def test_jm_matches_naive_polynomial_expansion() -> None:
    # dict-based full convolution, independent of the Horner truncation
    n_max = 5
    j = {i - 1: c for i, c in enumerate(j_coefficients(n_max + 3))}
    poly = faber_polynomial(3)
    acc = {0: poly.coeffs[0]}
    for coef in poly.coeffs[1:]:
        new: dict[int, int] = {}
        for ea, va in acc.items():
            for eb, vb in j.items():
                if ea + eb > n_max:
                    continue
                new[ea + eb] = new.get(ea + eb, 0) + va * vb
        new[0] = new.get(0, 0) + coef
        acc = new
    series = jm_coefficients(3, n_max)
    for e in range(-3, n_max + 1):
        assert series.coeff(e) == acc.get(e, 0), e


def test_qseries_coeff_bounds() -> None:
    series = jm_coefficients(1, 4)
    assert series.coeff(-5) == 0
    with pytest.raises(DomainError):
        series.coeff(5)


def test_reduce_examples() -> None:
    point = reduce_to_fundamental_domain(5 + 1j)
    assert point.z == pytest.approx(1j, abs=1e-14)
    assert point.word == ((1, -5), (0, 1))
    point = reduce_to_fundamental_domain(0.5j)
    assert point.z == pytest.approx(2j, abs=1e-14)
    point = reduce_to_fundamental_domain(0.4 + 0.2j)
    assert abs(point.z.real) <= 0.5 + 1e-9
    assert abs(point.z) >= 1 - 1e-9
    (a, b), (c, d) = point.word
    assert a * d - b * c == 1
    z0 = 0.4 + 0.2j
    assert (a * z0 + b) / (c * z0 + d) == pytest.approx(point.z, abs=1e-12)
    with pytest.raises(DomainError):
        reduce_to_fundamental_domain(0.3 + 1e-9j)


def test_eval_jm_examples() -> None:
    assert eval_jm(1, 1j) == pytest.approx(984.0, abs=1e-7)
    rho = complex(-0.5, math.sqrt(3) / 2)
    assert eval_jm(1, rho) == pytest.approx(-744.0, abs=1e-7)
    assert eval_jm(1, 0.3 + 1.1j) == pytest.approx(eval_jm(1, -0.7 + 1.1j), abs=1e-7)


def test_eval_jm_truncation_honored() -> None:
    z = 0.3 + 1.1j
    coarse = eval_jm(1, z, tol=1e-8)
    fine = eval_jm(1, z, tol=1e-12)
    assert abs(coarse - fine) < 1e-8 * max(1.0, abs(fine))


def test_eval_jm_double_mode_gate() -> None:
    with pytest.raises(ModeError):
        eval_jm(2, 8j, mode="double", tol=1e-10)
    value = eval_jm(2, 8j, mode="extended", tol=1e-10)
    assert float(mpmath.im(value)) == pytest.approx(0.0, abs=1e-6)


@given(
    z=st.complex_numbers(
        min_magnitude=0, max_magnitude=5, allow_nan=False, allow_infinity=False
    ).filter(lambda w: 0.2 <= w.imag <= 5),
    m=st.integers(min_value=1, max_value=4),
    shifts=st.lists(st.integers(min_value=-3, max_value=3), min_size=1, max_size=3),
)
@settings(max_examples=40, deadline=None)
def test_gamma_invariance(z: complex, m: int, shifts: list[int]) -> None:
    g = ((1, 0), (0, 1))
    for k in shifts:
        # T^k then S, entries stay small
        g = ((g[0][0] + k * g[1][0], g[0][1] + k * g[1][1]), g[1])
        g = ((-g[1][0], -g[1][1]), (g[0][0], g[0][1]))
    (a, b), (c, d) = g
    gz = (a * z + b) / (c * z + d)
    if gz.imag <= 1e-6:
        return
    v1 = eval_jm(m, z, mode="extended", tol=1e-8)
    v2 = eval_jm(m, gz, mode="extended", tol=1e-8)
    scale = max(1.0, float(mpmath.fabs(v1)))
    assert float(mpmath.fabs(v1 - v2)) < 1e-6 * scale


def test_cm_traces_classical() -> None:
    assert cm_trace(-3) == pytest.approx(-248.0, abs=1e-6)
    assert cm_trace(-4) == pytest.approx(492.0, abs=1e-6)
    assert cm_trace(-7) == pytest.approx(-4119.0, abs=1e-6)
    assert cm_trace(-8) == pytest.approx(7256.0, abs=1e-6)
    with pytest.raises(DomainError):
        cm_trace(-5)
    with pytest.raises(DomainError):
        cm_trace(5)


def test_cm_trace_integrality() -> None:
    for d in fundamental_discriminants(-500, -3):
        assert cm_trace_integer_defect(d) < 1e-6, d


def test_cm_trace_deviation_examples() -> None:
    assert cm_trace_deviation(-3) == pytest.approx(-248.0, abs=1e-6)
    assert cm_trace_deviation(-4) == pytest.approx(492.0, abs=1e-6)
    expected = -4119.0 + math.exp(math.pi * math.sqrt(7))
    assert cm_trace_deviation(-7) == pytest.approx(expected, abs=1e-6)


def test_cache_roundtrip(tmp_path, monkeypatch) -> None:
    monkeypatch.setattr(mf, "_J_MEMO", [])
    first = j_coefficients(8, cache_dir=tmp_path)
    path = tmp_path / "j_qexp.json"
    assert path.exists()
    data = json.loads(path.read_text())
    assert data["kind"] == "j_qexp"
    assert data["N"] >= 8

    monkeypatch.setattr(mf, "_J_MEMO", [])
    assert j_coefficients(8, cache_dir=tmp_path) == first

    monkeypatch.setattr(mf, "_J_MEMO", [])
    longer = j_coefficients(data["N"] + 16, cache_dir=tmp_path)
    assert longer[: len(first)] == first
    assert json.loads(path.read_text())["N"] >= data["N"] + 16

    path.write_text("{not json")
    monkeypatch.setattr(mf, "_J_MEMO", [])
    assert j_coefficients(8, cache_dir=tmp_path) == first


def test_jm_fresh_vs_cached(tmp_path, monkeypatch) -> None:
    cached = jm_coefficients(2, 10)
    monkeypatch.setattr(mf, "_J_MEMO", [])
    fresh = jm_coefficients(2, 10, cache_dir=tmp_path)
    assert fresh == cached


def test_faber_call_matches_series() -> None:
    poly = faber_polynomial(2)
    assert isinstance(poly, FaberPolynomial)
    x = 3.7 + 0.2j
    assert poly(x) == pytest.approx(x * x - 1488 * x + 159768, abs=1e-9)
