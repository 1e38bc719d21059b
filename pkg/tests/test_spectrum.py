from __future__ import annotations

import time

import numpy as np
import pytest

from app.numerics.circle_fourier import FourierFunction, MobiusMap, make_alpha_tau, mobius_pullback, normalize
from app.numerics.spectrum import (
    disk_eigenvalue,
    disk_eigenvalues,
    pair_differences,
    steklov_spectrum,
    weinstock_gap,
)


def test_disk_eigenvalue() -> None:
    assert [disk_eigenvalue(k) for k in range(6)] == [0, 1, 1, 2, 2, 3]
    assert np.array_equal(disk_eigenvalues(np.arange(6)), [0, 1, 1, 2, 2, 3])
    with pytest.raises(ValueError):
        disk_eigenvalue(-1)


def test_disk_spectrum(disk) -> None:
    started = time.perf_counter()
    result = steklov_spectrum(disk, 128)
    assert time.perf_counter() - started < 5.0

    assert result.trusted_count == 128
    k = np.arange(129)
    assert np.max(np.abs(result.eigenvalues[:129] - disk_eigenvalues(k))) < 1e-10
    assert np.max(np.abs(pair_differences(result))) < 1e-10
    assert abs(weinstock_gap(disk, 128, spectrum=result)) < 1e-10


def test_spectrum_rows() -> None:
    result = steklov_spectrum(make_alpha_tau(1, 0.1), 64)
    rows = result.rows()
    assert len(rows) == result.trusted_count + 1
    assert list(rows[3]) == ["k", "lambda_k", "disk_k", "diff"]
    assert rows[3]["disk_k"] == 2
    assert rows[3]["diff"] == pytest.approx(rows[3]["lambda_k"] - 2)


def test_weinstock_gap_is_positive_off_the_disk() -> None:
    a = make_alpha_tau(1, 0.1)
    result = steklov_spectrum(a, 128)
    assert result.eigenvalues[0] == pytest.approx(0.0, abs=1e-8)
    assert weinstock_gap(a, 128, spectrum=result) > 1e-6


def test_spectrum_converges_in_truncation() -> None:
    a = make_alpha_tau(2, 0.15)
    coarse = steklov_spectrum(a, 96)
    fine = steklov_spectrum(a, 160)
    k = min(coarse.trusted_count, fine.trusted_count, 48)
    assert np.max(np.abs(coarse.eigenvalues[: k + 1] - fine.eigenvalues[: k + 1])) < 1e-8


@pytest.mark.parametrize("w", [0.2, 0.4j])
@pytest.mark.parametrize("weight", ["disk", "alpha"])
def test_conformal_invariance(weight: str, w: complex) -> None:
    a = FourierFunction.constant(1.0) if weight == "disk" else make_alpha_tau(1, 0.2)
    b = mobius_pullback(a, MobiusMap(w))
    sa = steklov_spectrum(a, 256)
    sb = steklov_spectrum(b, 256)
    k = min(64, sa.trusted_count, sb.trusted_count)
    assert k >= 32
    assert np.max(np.abs(sa.eigenvalues[: k + 1] - sb.eigenvalues[: k + 1])) < 1e-6


@pytest.mark.parametrize("c", [0.25, 3.0])
def test_spectrum_ignores_weight_scale(alpha_r1, c: float) -> None:
    base = steklov_spectrum(alpha_r1, 64)
    rescaled = steklov_spectrum(normalize(alpha_r1.scaled(c)), 64)
    k = min(base.trusted_count, rescaled.trusted_count)
    assert np.max(np.abs(base.eigenvalues[: k + 1] - rescaled.eigenvalues[: k + 1])) < 1e-11
