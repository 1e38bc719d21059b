"""
app/numerics/spectrum.py

Steklov eigenvalues of a weight, paired with the disk eigenvalues floor((k+1)/2).

The trusted prefix is N eigenvalues (k = 1..N) unless an eigenvector already
carries energy in the outer band |n| > 3N/4 of the truncation; then the prefix
stops just before it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from app.errors import NumericalRejection
from app.numerics.circle_fourier import FourierFunction
from app.numerics.operators import SteklovDiscretization, build_discretization

logger = logging.getLogger(__name__)

KERNEL_TOL = 1e-8
EDGE_FRACTION = 0.75
EDGE_ENERGY_TOL = 1e-16


def disk_eigenvalue(k: int) -> int:
    if k < 0:
        raise ValueError(f"eigenvalue index must be >= 0, got {k}")
    return (int(k) + 1) // 2


def disk_eigenvalues(k) -> np.ndarray:
    """Vectorized floor((k+1)/2); accepts float index arrays from tail extrapolation."""
    return np.floor((np.asarray(k, dtype=float) + 1.0) / 2.0)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    trusted_count: int
    truncation_order: int
    tail_residual: float

    def trusted(self) -> np.ndarray:
        """lambda_0 .. lambda_K."""
        return self.eigenvalues[: self.trusted_count + 1]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def rows(self) -> list[dict]:
        """CSV rows k, lambda_k, disk_k, diff over the trusted prefix."""
        out = []
        for k, lam in enumerate(self.trusted()):
            disk = disk_eigenvalue(k)
            out.append({"k": k, "lambda_k": float(lam), "disk_k": disk, "diff": float(lam - disk)})
        return out


def steklov_spectrum(
    a: FourierFunction,
    N: int,
    discretization: SteklovDiscretization | None = None,
) -> SpectrumResult:
    disc = discretization or build_discretization(a, N)
    N = disc.truncation_order
    w, v = eigh(disc.lambda_a)
    if w[0] < -KERNEL_TOL:
        raise NumericalRejection(f"kernel eigenvalue {w[0]:.3e} is negative beyond tolerance")
    if w[0] > KERNEL_TOL:
        logger.warning("kernel eigenvalue %.3e above %.0e; truncation may be too small", w[0], KERNEL_TOL)
    w = w.copy()
    w[0] = max(w[0], 0.0)

    edge = np.abs(disc.modes) > EDGE_FRACTION * N
    edge_energy = np.sum(np.abs(v[edge, 1: N + 1]) ** 2, axis=0)
    bad = np.flatnonzero(edge_energy >= EDGE_ENERGY_TOL)
    trusted = int(bad[0]) if bad.size else N
    if trusted < N:
        logger.info("trusted prefix shortened to %d of %d (edge energy %.2e)", trusted, N, edge_energy[trusted])

    start = max(1, (3 * trusted) // 4)
    k = np.arange(start, trusted + 1)
    tail_residual = float(np.max(np.abs(w[k] - disk_eigenvalues(k)))) if k.size else 0.0
    return SpectrumResult(eigenvalues=w, trusted_count=trusted, truncation_order=N, tail_residual=tail_residual)


def pair_differences(result: SpectrumResult) -> np.ndarray:
    """d_k = lambda_k - floor((k+1)/2) for k = 1..trusted_count."""
    k = np.arange(1, result.trusted_count + 1)
    return result.eigenvalues[k] - disk_eigenvalues(k)


def weinstock_gap(a: FourierFunction, N: int, spectrum: SpectrumResult | None = None) -> float:
    """1 - lambda_1; zero at the disk, positive otherwise."""
    spectrum = spectrum or steklov_spectrum(a, N)
    return float(1.0 - spectrum.eigenvalues[1])
