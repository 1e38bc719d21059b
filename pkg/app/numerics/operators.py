"""
app/numerics/operators.py

Fourier-Galerkin matrices for the weighted Dirichlet-to-Neumann operator
Lambda_a = a^{1/2} Lambda a^{1/2}, its companion D_a = a^{1/2} D a^{1/2}, the kernel
projector P_0, and the basis phi_n = (2 pi a)^{-1/2} exp(i n Theta), Theta = int_0^theta 1/a.

Purpose
- build_discretization(a, N) -> SteklovDiscretization on the modes n = -N..N
- matrix_function(A, f)      -> f(A) for f in {power(s), log, power_log(s, m)}
- quadratic_form(Op, u, v)   -> <Op u, v> in the coefficient inner product

Assembly is the exact Galerkin projection: T maps the 2N+1 retained modes into
the 2(N+B)+1 modes reached by multiplication with a^{1/2} (bandwidth B), so
lambda_a = T^H diag(|n|) T has no edge corruption from truncating a product.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.fft import fft, fftshift
from scipy.linalg import eigh

from app.errors import NormalizationError, OperatorError
from app.numerics.circle_fourier import (
    MIN_NONLINEAR_ORDER,
    FourierFunction,
    grid_nodes,
    normalization_residual,
    pointwise_power,
)

logger = logging.getLogger(__name__)

# --------------------------------------------------------------------
# Tolerances
# --------------------------------------------------------------------
NORMALIZATION_TOL = 1e-8
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-8
EIGEN_FLOOR = 1e-10
EFFECTIVE_BANDWIDTH_TOL = 1e-6
PHI_LEAKAGE_TOL = 1e-24          # energy of phi_n outside the retained modes


@dataclass(frozen=True)
class SpectralFunction:
    """Scalar function applied through the eigendecomposition."""

    kind: Literal["power", "log", "power_log"]
    s: float = 1.0
    m: int = 0

    @classmethod
    def power(cls, s: float) -> SpectralFunction:
        return cls("power", s=float(s))

    @classmethod
    def log(cls) -> SpectralFunction:
        return cls("log")

    @classmethod
    def power_log(cls, s: float, m: int) -> SpectralFunction:
        return cls("power_log", s=float(s), m=int(m))

    @property
    def singular(self) -> bool:
        """True when f blows up at 0, so eigenvalues are clamped to EIGEN_FLOOR."""
        return self.kind != "power" or self.s < 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "power":
            return x ** self.s
        if self.kind == "log":
            return np.log(x)
        return x ** self.s * np.log(x) ** self.m


def _apply_spectral(w: np.ndarray, v: np.ndarray, f: SpectralFunction) -> np.ndarray:
    if w[0] < -PSD_TOL:
        raise OperatorError(f"matrix is not positive semidefinite (smallest eigenvalue {w[0]:.3e})")
    w = np.maximum(w, EIGEN_FLOOR if f.singular else 0.0)
    return (v * f(w)) @ v.conj().T


def _check_hermitian(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    asym = float(np.max(np.abs(A - A.conj().T)))
    if asym > HERMITIAN_TOL * scale:
        raise OperatorError(f"matrix is not Hermitian (asymmetry {asym:.3e})")


def matrix_function(A: np.ndarray, f: SpectralFunction) -> np.ndarray:
    """f(A) for a Hermitian positive semidefinite matrix."""
    A = np.asarray(A)
    _check_hermitian(A)
    w, v = eigh(0.5 * (A + A.conj().T))
    return _apply_spectral(w, v, f)


def quadratic_form(op: np.ndarray, u: np.ndarray, v: np.ndarray) -> complex:
    """<Op u, v> = sum_k (Op u)_k conj(v_k)."""
    op = np.asarray(op)
    u = np.asarray(u)
    v = np.asarray(v)
    if op.ndim != 2 or op.shape[1] != u.shape[0] or op.shape[0] != v.shape[0]:
        raise ValueError(f"dimension mismatch: op {op.shape}, u {u.shape}, v {v.shape}")
    return complex(np.vdot(v, op @ u))


def _toeplitz_extension(f: FourierFunction, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of multiplication by f from modes -N..N into modes -(N+B)..(N+B)."""
    B = f.grid_order
    cols = np.arange(-N, N + 1)
    rows = np.arange(-(N + B), N + B + 1)
    offset = rows[:, None] - cols[None, :]
    inside = np.abs(offset) <= B
    T = np.where(inside, f.coeffs[np.clip(offset + B, 0, 2 * B)], 0.0)
    return T, rows


def _hermitian_part(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


@dataclass(frozen=True, eq=False)
class SteklovDiscretization:
    """Galerkin matrices at truncation order N (dimension 2N+1)."""

    truncation_order: int
    weight: FourierFunction
    lambda_a: np.ndarray
    d_a: np.ndarray
    p0: np.ndarray
    kernel_vector: np.ndarray
    normalization_residual: float
    sqrt_bandwidth: int

    @property
    def N(self) -> int:
        return self.truncation_order

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.truncation_order, self.truncation_order + 1)

    @property
    def dimension(self) -> int:
        return 2 * self.truncation_order + 1

    @cached_property
    def shifted(self) -> np.ndarray:
        """Lambda_a + P_0, the invertible operator every functional calculus runs on."""
        return _hermitian_part(self.lambda_a + self.p0)

    @cached_property
    def shifted_eigh(self) -> tuple[np.ndarray, np.ndarray]:
        return eigh(self.shifted)

    def function_of_shifted(self, f: SpectralFunction) -> np.ndarray:
        w, v = self.shifted_eigh
        return _apply_spectral(w, v, f)

    @cached_property
    def lambda_squared(self) -> np.ndarray:
        return self.lambda_a @ self.lambda_a

    # ---- phi_n basis ----
    @cached_property
    def _phi(self) -> tuple[np.ndarray, np.ndarray]:
        N = self.truncation_order
        L = 2 * N
        size = 2 * L + 1
        a = self.weight

        inv_a = pointwise_power(a, -1.0, order=max(L, a.grid_order))
        k = inv_a.modes
        nonzero = k != 0
        shift = np.zeros_like(inv_a.coeffs)
        shift[nonzero] = inv_a.coeffs[nonzero] / (1j * k[nonzero])
        shift[inv_a.grid_order] = -np.sum(shift[nonzero])
        periodic = FourierFunction(shift, inv_a.grid_order).resized(L).real_samples(L)
        big_theta = grid_nodes(L) + periodic

        inv_sqrt = pointwise_power(a, -0.5, order=max(L, a.grid_order)).resized(L).real_samples(L)
        values = inv_sqrt[:, None] * np.exp(1j * np.outer(big_theta, self.modes))
        coeffs = fftshift(fft(values, axis=0), axes=0) / size
        inside = slice(L - N, L + N + 1)
        basis = coeffs[inside, :]
        outside = np.ones(size, dtype=bool)
        outside[inside] = False
        leakage = np.sum(np.abs(coeffs[outside, :]) ** 2, axis=0)
        return basis, leakage

    @property
    def phi_basis(self) -> np.ndarray:
        return self._phi[0]

    @property
    def phi_leakage(self) -> np.ndarray:
        return self._phi[1]

    def phi(self, n: int) -> np.ndarray:
        if abs(n) > self.truncation_order:
            raise ValueError(f"phi_{n} is outside the truncation N={self.truncation_order}")
        return self.phi_basis[:, n + self.truncation_order]

    def trusted_phi_modes(self) -> np.ndarray:
        """Modes n with |n| <= N/2 whose phi_n is fully resolved by the retained modes."""
        N = self.truncation_order
        n = np.arange(0, N // 2 + 1)
        leak = np.maximum(self.phi_leakage[N + n], self.phi_leakage[N - n])
        bad = np.flatnonzero(leak >= PHI_LEAKAGE_TOL)
        limit = int(bad[0]) - 1 if bad.size else N // 2
        if limit < N // 2:
            logger.debug("phi basis resolved for |n| <= %d of %d", limit, N // 2)
        return np.arange(-limit, limit + 1)

    @cached_property
    def abs_da(self) -> np.ndarray:
        basis = self.phi_basis
        return _hermitian_part((basis * np.abs(self.modes)) @ basis.conj().T)

    def phi_diagonal(self, op: np.ndarray, modes: np.ndarray | None = None) -> np.ndarray:
        """<Op phi_n, phi_n> for the given modes (trusted modes by default)."""
        modes = self.trusted_phi_modes() if modes is None else np.asarray(modes)
        cols = self.phi_basis[:, modes + self.truncation_order]
        return np.einsum("ij,ij->j", cols.conj(), op @ cols)


def build_discretization(a: FourierFunction, N: int) -> SteklovDiscretization:
    """Assemble lambda_a, d_a and p0 for a positive normalized weight a."""
    if int(N) != N or N < 1:
        raise ValueError(f"truncation order must be a positive integer, got {N!r}")
    N = int(N)
    residual = normalization_residual(a)
    if residual > NORMALIZATION_TOL:
        raise NormalizationError(
            f"mean of 1/a differs from 1 by {residual:.3e} (tolerance {NORMALIZATION_TOL:g}); normalize the weight first"
        )
    band = a.bandwidth(EFFECTIVE_BANDWIDTH_TOL)
    if N < 4 * band:
        logger.warning("truncation N=%d is below 4x the effective weight bandwidth %d", N, band)

    sqrt_a = pointwise_power(a, 0.5, order=max(2 * a.grid_order, MIN_NONLINEAR_ORDER)).trimmed()
    T, rows = _toeplitz_extension(sqrt_a, N)
    TH = T.conj().T
    lambda_a = _hermitian_part(TH @ (np.abs(rows)[:, None] * T))
    d_a = _hermitian_part(TH @ (rows[:, None] * T))

    inv_sqrt = pointwise_power(a, -0.5, order=max(N, 2 * a.grid_order, MIN_NONLINEAR_ORDER)).resized(N)
    kernel = inv_sqrt.coeffs / np.linalg.norm(inv_sqrt.coeffs)
    p0 = np.outer(kernel, kernel.conj())

    logger.debug("assembled N=%d (sqrt bandwidth %d, residual %.2e)", N, sqrt_a.grid_order, residual)
    return SteklovDiscretization(
        truncation_order=N,
        weight=a,
        lambda_a=lambda_a,
        d_a=d_a,
        p0=p0,
        kernel_vector=kernel,
        normalization_residual=residual,
        sqrt_bandwidth=sqrt_a.grid_order,
    )


def dump_matrix(matrix: np.ndarray, path: str | Path) -> Path:
    """Raw row-major little-endian dump; complex entries are written as (re, im) float64 pairs."""
    path = Path(path)
    data = np.ascontiguousarray(matrix)
    if np.iscomplexobj(data):
        data = data.astype("<c16").view("<f8")
    else:
        data = data.astype("<f8")
    data.tofile(path)
    return path
