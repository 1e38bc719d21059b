from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from app.errors import SearchExhausted
from app.numerics.circle_fourier import FourierFunction, make_alpha_tau, normalization_residual
from app.numerics.operators import build_discretization
from app.numerics.variation import (
    DeformationFamily,
    VariationReport,
    asymptotic_coefficient,
    asymptotic_offset,
    coefficient_gamma,
    coefficient_h,
    coefficient_rho,
    counterexample_search,
    first_variation_check,
    log_diag_check,
    log_diag_expansion,
    log_diag_numeric,
    phi_moment,
    prop4_summands,
    rescaled_second_variation_prime,
    second_variation_check,
    second_variation_zeta,
    second_variation_zeta_prime,
)
from app.numerics.zeta import s0_function


def test_second_variation_closed_form_values() -> None:
    assert second_variation_zeta(FourierFunction.cosine(2), 2.0) == pytest.approx(8.0, rel=1e-14)
    assert second_variation_zeta(FourierFunction.cosine(3), 1.0) == pytest.approx(8.0 / 3.0, rel=1e-14)
    assert second_variation_zeta_prime(1, 1.0) == pytest.approx(8.0 / 3.0 * (1.0 + math.log(2.0)), rel=1e-12)


def test_second_variation_requires_zero_mean() -> None:
    with pytest.raises(ValueError, match="zero mean"):
        second_variation_zeta(FourierFunction.constant(1.0) + FourierFunction.cosine(2), 1.0)
    with pytest.raises(ValueError):
        second_variation_zeta_prime(0, 1.0)


@pytest.mark.parametrize("s", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("r", [1, 2, 5, 11, 20])
def test_z_derivative_matches_closed_form(r: int, s: float) -> None:
    beta = DeformationFamily.single_mode(r).beta
    h = 1e-3

    def centered(step: float) -> float:
        return (second_variation_zeta(beta, s + step) - second_variation_zeta(beta, s - step)) / (2 * step)

    fd = (4.0 * centered(h / 2) - centered(h)) / 3.0
    assert fd == pytest.approx(second_variation_zeta_prime(r, s), rel=1e-8, abs=1e-9)


def test_large_r_limit_above_two() -> None:
    assert rescaled_second_variation_prime(2000, 3.0) == pytest.approx(s0_function(3.0), abs=0.05)


def test_large_r_limit_at_one() -> None:
    slope = asymptotic_coefficient(1.0)
    offset = asymptotic_offset(1.0)

    def error(r: int) -> float:
        return abs(second_variation_zeta_prime(r, 1.0) / 8.0 - math.log(2 * r + 1) * slope - offset)

    assert error(2000) < 0.05
    assert error(2000) < error(15)


def test_asymptotic_coefficient() -> None:
    assert asymptotic_coefficient(1.0) == pytest.approx(-0.5, rel=1e-10)
    for s in (0.25, 0.5, 1.5, 1.9):
        assert asymptotic_coefficient(s) < 0.0
    with pytest.raises(ValueError):
        asymptotic_coefficient(2.0)


def test_asymptotic_offset_against_direct_quadrature() -> None:
    s = 1.0

    def integrand(x: float) -> float:
        def bracket(y: float) -> float:
            return y ** -s * (-1.0 + s * math.log(y))

        return x * (1.0 - x) / (2.0 * x - 1.0) * (bracket(x) - bracket(1.0 - x))

    expected, _ = quad(integrand, 0.5 + 1e-9, 1.0, limit=400)
    assert asymptotic_offset(s) == pytest.approx(expected, rel=1e-6)


def test_coefficient_gamma() -> None:
    assert coefficient_gamma(2, 1) == pytest.approx(-0.0505358, abs=1e-7)
    assert coefficient_gamma(10, 1) == pytest.approx(-0.054024, abs=1e-6)
    for p, m in [(1, 2), (3, 7), (10, 1)]:
        assert coefficient_gamma(p, m) == -coefficient_gamma(m, p)
    with pytest.raises(ValueError):
        coefficient_gamma(3, 3)
    with pytest.raises(ValueError):
        coefficient_gamma(0, 2)


def test_coefficient_rho() -> None:
    assert coefficient_rho(3, 3, 2.0) == pytest.approx(18.0)
    assert coefficient_rho(0, 0, 1.0) == pytest.approx(1.0)
    assert coefficient_rho(2, 1, 1.0) == pytest.approx(1.0 / math.log(2.0))
    assert coefficient_rho(-2, 1, 1.0) == coefficient_rho(2, 1, 1.0)

    expected, _ = quad(lambda t: 2.0 ** t * 5.0 ** (1.5 - t), 0.0, 1.5)
    assert coefficient_rho(2, 5, 1.5) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(ValueError):
        coefficient_rho(1, 2, 0.0)


def test_coefficient_h() -> None:
    assert coefficient_h(2, 2) == pytest.approx(0.125)
    assert coefficient_h(1, 0) == pytest.approx(0.5)
    assert coefficient_h(2, 1) == pytest.approx(math.log(2.0) - 0.5)
    with pytest.raises(ValueError):
        coefficient_h(0, 1)


def test_deformation_family() -> None:
    family = DeformationFamily.single_mode(3)
    assert np.array_equal(family.weight(0.01).coeffs, make_alpha_tau(3, 0.01).coeffs)
    assert family.weight(0.0).coefficient(0) == 1.0

    general = DeformationFamily.general(FourierFunction.cosine(2) + FourierFunction.cosine(3, amplitude=0.5))
    assert normalization_residual(general.weight(0.05)) < 1e-12

    with pytest.raises(ValueError):
        DeformationFamily.general(FourierFunction.constant(0.1))
    with pytest.raises(ValueError):
        DeformationFamily("single_mode", FourierFunction.cosine(3))


@pytest.mark.parametrize("z", [-1.0, 0.5, 2.0])
@pytest.mark.parametrize("frequency", [2, 3, 5])
def test_second_variation_against_spectrum(frequency: int, z: float) -> None:
    family = DeformationFamily.general(FourierFunction.cosine(frequency))
    report = second_variation_check(family, z, 128)
    assert report.quantity == "second_variation_zeta"
    assert report.relative_error < 1e-4


def test_first_variation_vanishes() -> None:
    report = first_variation_check(DeformationFamily.single_mode(1), 0.5, 128)
    assert report.closed_form == 0.0
    assert abs(report.finite_difference) < 1e-6


def test_log_diagonal_has_no_first_order_term() -> None:
    family = DeformationFamily.single_mode(2)
    h = 1e-3
    plus = log_diag_numeric(family.weight(h), 1, 128)
    minus = log_diag_numeric(family.weight(-h), 1, 128)
    assert abs(plus - minus) / (2 * h) < 1e-6


def test_log_diagonal_of_disk(disk) -> None:
    assert log_diag_numeric(disk, 3, 64) == pytest.approx(math.log(3.0), abs=1e-12)
    with pytest.raises(ValueError):
        log_diag_numeric(disk, 20, 64)


def test_log_diagonal_second_order_expansion() -> None:
    family = DeformationFamily.single_mode(5)
    assert log_diag_expansion(1, family.beta) == pytest.approx(coefficient_gamma(10, 1))

    coarse = log_diag_check(family, 1, 0.01, 128)
    assert coarse.predicted_shift == pytest.approx(-1.08e-5, rel=0.01)
    assert coarse.ratio == pytest.approx(1.0, abs=0.1)

    fine = log_diag_check(family, 1, 0.005, 128)
    assert fine.ratio == pytest.approx(1.0, abs=0.03)


def test_low_and_high_modes_move_in_opposite_directions() -> None:
    a = make_alpha_tau(5, 0.01)
    disc = build_discretization(a, 128)
    assert phi_moment(a, 1, 1e-3, 128, discretization=disc) < 1.0
    assert phi_moment(a, 1, 0.05, 128, discretization=disc) < 1.0
    assert phi_moment(a, 10, -1e-3, 128, discretization=disc) < 10.0 ** -1e-3


def test_negative_side_summands_are_nonnegative() -> None:
    a = make_alpha_tau(1, 0.2)
    modes, summands = prop4_summands(a, 1.0, 128)
    assert 0 not in modes
    base = np.abs(modes).astype(float)
    assert np.all(summands >= -1e-8 * np.maximum(1.0, base * np.log(base) ** 2))


def test_variation_report_compare() -> None:
    report = VariationReport.compare(2.0, 2.002, 1e-3, "q", 0.5)
    assert report.relative_error == pytest.approx(1e-3)
    assert report.as_row()["quantity"] == "q"
    assert VariationReport.compare(0.0, 1e-7, 1e-4).relative_error == pytest.approx(1e-7)


def test_counterexample_search_finds_witness() -> None:
    first = next(r for r in range(1, 30) if second_variation_zeta_prime(r, 1.0) < 0.0)
    assert 8 <= first <= 14
    assert second_variation_zeta_prime(5, 1.0) > 0.0

    report = counterexample_search(1.0, 20, 0.01, 256, max_workers=1)
    assert report.first_negative_r == first
    assert report.r_found >= first
    assert report.spectral_diff1 < 0.0
    assert abs(report.spectral_diff1_at_zero) < 1e-6
    assert report.relative_mismatch <= 0.2
    assert report.diff2_value < 0.0
    assert not report.exploratory


def test_counterexample_search_errors() -> None:
    with pytest.raises(SearchExhausted, match="r_max"):
        counterexample_search(1.0, 5, 0.01, 128)
    with pytest.raises(ValueError):
        counterexample_search(0.0, 20, 0.01, 128)
    with pytest.raises(ValueError):
        counterexample_search(5.0, 20, 0.01, 128)
    with pytest.raises(ValueError):
        counterexample_search(1.0, 20, 0.05, 128)
