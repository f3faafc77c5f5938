"""Binary quadratic forms: reduction cycles, automorphs, class counts,
genus characters, and the Dirichlet cross-check tying geodesic lengths to
L-values."""

from __future__ import annotations

import math

import pytest

from modtraces.errors import AdmissibilityError, DomainError
from modtraces.ntheory import delta_d, dirichlet_L, is_fundamental
from modtraces.quadforms import (
    FormCycle,
    GenusCharacterSpec,
    QuadForm,
    character_of_form,
    enumerate_zagier_reduced,
    fundamental_automorph,
    genus_character,
    is_zagier_reduced,
    mat_mul,
    narrow_class_count,
    reduced_forms_imaginary,
    total_geodesic_length,
    zagier_cycles,
)

T = ((1, 1), (0, 1))
S = ((0, -1), (1, 0))


def _admissible_discs(lo: int, hi: int) -> list[int]:
    out = []
    for D in range(lo, hi + 1):
        if D % 4 in (0, 1) and math.isqrt(D) ** 2 != D:
            out.append(D)
    return out


def test_imaginary_forms_examples() -> None:
    neg3 = reduced_forms_imaginary(-3)
    assert [(f.a, f.b, f.c) for f in neg3.forms] == [(1, 1, 1)]
    assert (neg3.h, neg3.omega) == (1, 3)
    neg4 = reduced_forms_imaginary(-4)
    assert [(f.a, f.b, f.c) for f in neg4.forms] == [(1, 0, 1)]
    assert (neg4.h, neg4.omega) == (1, 2)
    neg23 = reduced_forms_imaginary(-23)
    assert {(f.a, f.b, f.c) for f in neg23.forms} == {(1, 1, 6), (2, 1, 3), (2, -1, 3)}
    assert neg23.h == 3


def test_zagier_cycle_examples() -> None:
    cycles5 = zagier_cycles(5)
    assert len(cycles5) == 1
    assert [(f.a, f.b, f.c) for f in cycles5[0].forms] == [(1, -3, 1)]
    assert cycles5[0].cf_exponents == (3,)

    cycles13 = zagier_cycles(13)
    assert len(cycles13) == 1
    assert cycles13[0].ell == 3
    # canonical rotation of (5, 2, 2)
    assert cycles13[0].cf_exponents == (2, 2, 5)

    assert len(zagier_cycles(21)) == 2


def test_pell_examples() -> None:
    u5 = fundamental_automorph(5)
    assert (u5.t, u5.u) == (3, 1)
    assert u5.log_eps == pytest.approx(0.9624237, abs=1e-6)
    u13 = fundamental_automorph(13)
    assert (u13.t, u13.u) == (11, 3)
    assert u13.log_eps == pytest.approx(2.3895264, abs=1e-6)
    u8 = fundamental_automorph(8)
    assert (u8.t, u8.u) == (6, 2)
    assert u8.log_eps == pytest.approx(1.7627472, abs=1e-6)


def test_genus_character_examples() -> None:
    for form in ((1, 1, -5), (3, 3, -1), (1, -3, 1), (2, 1, 3)):
        assert character_of_form(1, QuadForm(*form)) == 1
    spec = GenusCharacterSpec(D=21, d=-3, d_prime=-7)
    assert genus_character(spec, QuadForm(1, 1, -5)) == 1
    assert genus_character(spec, QuadForm(3, 3, -1)) == -1


def test_narrow_class_count_examples() -> None:
    assert narrow_class_count(5) == 1
    assert narrow_class_count(13) == 1
    assert narrow_class_count(21) == 2


def test_square_discriminant_rejected() -> None:
    with pytest.raises((AdmissibilityError, DomainError)):
        zagier_cycles(16)
    with pytest.raises((AdmissibilityError, DomainError)):
        fundamental_automorph(9)


def test_cycles_partition_reduced_forms() -> None:
    for D in _admissible_discs(5, 500):
        reduced = {(f.a, f.b, f.c) for f in enumerate_zagier_reduced(D)}
        assert all(is_zagier_reduced(QuadForm(*f)) for f in reduced)
        seen: set[tuple[int, int, int]] = set()
        for cyc in zagier_cycles(D):
            for f in cyc.forms:
                key = (f.a, f.b, f.c)
                assert key not in seen, (D, key)
                seen.add(key)
        assert seen == reduced, D


def test_automorph_word_fixes_root_with_pell_trace() -> None:
    # An imprimitive cycle (content g) is stabilized by the automorph of
    # its underlying discriminant D / g^2, so that is the Pell trace it
    # must reproduce; for primitive cycles this is fundamental_automorph(D).
    for D in _admissible_discs(5, 200):
        for cyc in zagier_cycles(D):
            g = cyc.forms[0].content
            t_pell = fundamental_automorph(D // (g * g)).t
            M = ((1, 0), (0, 1))
            for letter in cyc.automorph_word:
                M = mat_mul(M, T if letter == "T" else S)
            (a, b), (c, d) = M
            assert a + d == t_pell, D
            form = cyc.forms[0]
            w = (-form.b + math.sqrt(D)) / (2 * form.a)
            assert abs(a * w + b - w * (c * w + d)) < 1e-7, (D, form)


def _fundamental_factorizations(D: int) -> list[GenusCharacterSpec]:
    specs = []
    for d in range(-abs(D), abs(D) + 1):
        if d == 0 or D % d:
            continue
        if is_fundamental(d) and (D // d) % 4 in (0, 1):
            specs.append(GenusCharacterSpec(D=D, d=d, d_prime=D // d))
    return specs


def test_genus_character_constant_on_cycles() -> None:
    for D in _admissible_discs(5, 300):
        for spec in _fundamental_factorizations(D):
            for cyc in zagier_cycles(D):
                values = {genus_character(spec, f) for f in cyc.forms}
                assert len(values) == 1, (D, spec.d)


def test_genus_character_orthogonality() -> None:
    for D in [D for D in _admissible_discs(5, 300) if is_fundamental(D)]:
        h_plus = narrow_class_count(D)
        for spec in _fundamental_factorizations(D):
            total = sum(genus_character(spec, cyc.forms[0]) for cyc in zagier_cycles(D))
            if spec.d == D:
                # chi_D is chi_1 in genus theory: trivial on every class
                assert total == h_plus, D
            else:
                assert total == delta_d(spec.d) * h_plus, (D, spec.d)


def test_total_length_dirichlet_cross_check() -> None:
    for D in [D for D in _admissible_discs(5, 200) if is_fundamental(D)]:
        expected = 2 * math.sqrt(D) * dirichlet_L(D, 1).real
        assert total_geodesic_length(D) == pytest.approx(expected, abs=1e-8), D


def test_cycle_length_matches_automorph() -> None:
    # imprimitive cycles (D = 20 has one of content 2) carry the length of
    # their underlying discriminant
    for D in (5, 8, 13, 17, 20, 21, 24, 33, 45):
        for cyc in zagier_cycles(D):
            g = cyc.forms[0].content
            log_eps = fundamental_automorph(D // (g * g)).log_eps
            assert cyc.length() == pytest.approx(2 * log_eps, rel=1e-12)


def test_character_spec_rejects_non_discriminant_cofactor() -> None:
    with pytest.raises(AdmissibilityError):
        GenusCharacterSpec(D=24, d=-4, d_prime=-6)
