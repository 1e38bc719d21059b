from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm, logm

from app.errors import NormalizationError, OperatorError
from app.numerics.circle_fourier import FourierFunction, make_alpha_tau
from app.numerics.operators import (
    SpectralFunction,
    build_discretization,
    dump_matrix,
    matrix_function,
    quadratic_form,
)


def test_disk_discretization_is_diagonal(disk) -> None:
    disc = build_discretization(disk, 16)
    n = disc.modes
    assert disc.dimension == 33
    assert np.allclose(disc.lambda_a, np.diag(np.abs(n)), atol=1e-12)
    assert np.allclose(disc.d_a, np.diag(n), atol=1e-12)
    expected_p0 = np.zeros((33, 33))
    expected_p0[16, 16] = 1.0
    assert np.allclose(disc.p0, expected_p0, atol=1e-12)


def test_unnormalized_weight_is_refused() -> None:
    with pytest.raises(NormalizationError):
        build_discretization(FourierFunction.constant(2.0), 16)


def test_kernel_of_lambda_a(alpha_r1) -> None:
    disc = build_discretization(alpha_r1, 64)
    assert np.linalg.norm(disc.lambda_a @ disc.kernel_vector) < 1e-12
    assert np.allclose(disc.lambda_a, disc.lambda_a.conj().T)


def test_d_a_acts_diagonally_on_phi_basis() -> None:
    disc = build_discretization(make_alpha_tau(1, 0.2), 128)
    modes = disc.trusted_phi_modes()
    assert modes.size > 0 and modes[-1] >= 16
    for n in range(-16, 17):
        phi = disc.phi(n)
        assert np.linalg.norm(phi) == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.norm(disc.d_a @ phi - n * phi) < 1e-8


def test_phi_basis_is_orthonormal_on_trusted_modes(alpha_r1) -> None:
    disc = build_discretization(alpha_r1, 64)
    cols = disc.phi_basis[:, disc.trusted_phi_modes() + disc.N]
    gram = cols.conj().T @ cols
    assert np.allclose(gram, np.eye(gram.shape[0]), atol=1e-10)


def test_matrix_function_power_and_log() -> None:
    A = np.diag([1.0, 4.0, 9.0])
    assert np.allclose(matrix_function(A, SpectralFunction.power(0.5)), np.diag([1.0, 2.0, 3.0]))

    rng = np.random.default_rng(3)
    X = rng.normal(size=(6, 6))
    spd = X @ X.T + 6 * np.eye(6)
    assert np.allclose(matrix_function(spd, SpectralFunction.log()), logm(spd).real, atol=1e-10)
    assert np.allclose(
        matrix_function(spd, SpectralFunction.power_log(-1.0, 1)),
        np.linalg.inv(spd) @ logm(spd).real,
        atol=1e-10,
    )


def test_matrix_function_rejects_bad_input() -> None:
    with pytest.raises(OperatorError, match="Hermitian"):
        matrix_function(np.array([[1.0, 2.0], [0.0, 1.0]]), SpectralFunction.log())
    with pytest.raises(OperatorError, match="semidefinite"):
        matrix_function(np.diag([1.0, -1.0]), SpectralFunction.power(2.0))


def test_quadratic_form_conjugates_second_argument() -> None:
    op = np.eye(2)
    assert quadratic_form(op, np.array([1.0, 1j]), np.array([1.0, 0.0])) == 1.0
    assert quadratic_form(op, np.array([1.0, 0.0]), np.array([1j, 0.0])) == -1j
    with pytest.raises(ValueError):
        quadratic_form(op, np.ones(3), np.ones(2))


def test_dump_matrix(tmp_path, alpha_r1) -> None:
    disc = build_discretization(alpha_r1, 16)
    path = dump_matrix(disc.lambda_a, tmp_path / "lambda.bin")
    raw = np.fromfile(path, dtype="<c16").reshape(disc.lambda_a.shape)
    assert np.array_equal(raw, disc.lambda_a)


def test_abs_d_a_acts_as_mode_modulus() -> None:
    disc = build_discretization(make_alpha_tau(1, 0.2), 128)
    assert np.allclose(disc.abs_da, disc.abs_da.conj().T)
    for n in range(-16, 17):
        phi = disc.phi(n)
        assert np.linalg.norm(disc.abs_da @ phi - abs(n) * phi) < 1e-7


def test_log_of_shifted_operator_exponentiates_back(alpha_r1) -> None:
    disc = build_discretization(alpha_r1, 64)
    log_shifted = disc.function_of_shifted(SpectralFunction.log())
    assert np.max(np.abs(expm(log_shifted) - disc.shifted)) < 1e-10 * np.max(np.abs(disc.shifted))


@pytest.mark.parametrize("s", [1.0, 2.0])
def test_powers_of_shifted_operator_dominate_mode_powers(s: float) -> None:
    disc = build_discretization(make_alpha_tau(1, 0.2), 128)
    modes = np.arange(-16, 17)
    moments = disc.phi_diagonal(disc.function_of_shifted(SpectralFunction.power(s)), modes).real
    floor = np.maximum(np.abs(modes), 1).astype(float) ** s
    assert np.all(moments >= floor * (1.0 - 1e-8) - 1e-8)
