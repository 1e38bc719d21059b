"""
app/numerics/circle_fourier.py

Smooth real functions on the unit circle, stored as truncated Fourier series.

Purpose
- FourierFunction holds coefficients c_k for k = -M..M; samples live on the
  2M+1 uniform nodes theta_j = 2*pi*j/(2M+1).
- Nonlinear pointwise operations (powers, products, composition with a disk
  automorphism) are done on an oversampled grid and truncated back.
- make_alpha_tau builds the single-mode family (1 - 2 tau cos((2r+1) theta))^-1
  from its closed-form coefficients, so it is normalized exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from numbers import Number
from typing import Literal

import numpy as np
from numpy.fft import fft, fftshift, ifft, ifftshift

from app.errors import WeightDomainError

logger = logging.getLogger(__name__)

# --------------------------------------------------------------------
# Resolution and positivity policy
# --------------------------------------------------------------------
OVERSAMPLING = 2                 # grid factor for pointwise nonlinear operations
MIN_NONLINEAR_ORDER = 32         # output order floor for powers of low-order inputs
MIN_PULLBACK_ORDER = 128
POSITIVITY_MARGIN = 1e-10        # minimum admissible grid value of a weight
TRIM_TOL = 1e-16                 # relative coefficient size treated as roundoff
ALPHA_TAIL = 1e-18               # truncation of the geometric series in make_alpha_tau
MAX_ORDER = 16384


def grid_nodes(order: int) -> np.ndarray:
    size = 2 * order + 1
    return 2.0 * np.pi * np.arange(size) / size


def _synthesize(coeffs: np.ndarray) -> np.ndarray:
    return ifft(ifftshift(coeffs)) * coeffs.size


@dataclass(frozen=True, eq=False)
class FourierFunction:
    """Function on the circle with coefficients ``coeffs[k + grid_order]`` = c_k."""

    coeffs: np.ndarray
    grid_order: int

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=complex)
        order = int(self.grid_order)
        if order < 0 or coeffs.shape != (2 * order + 1,):
            raise ValueError(
                f"grid_order={order} needs {2 * order + 1} coefficients, got shape {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "grid_order", order)

    # ---- constructors ----
    @classmethod
    def constant(cls, value: float = 1.0) -> FourierFunction:
        return cls(np.array([value], dtype=complex), 0)

    @classmethod
    def from_modes(cls, modes: dict[int, complex], grid_order: int | None = None) -> FourierFunction:
        """Build from a sparse {k: c_k} mapping, e.g. {3: 1, -3: 1} for 2cos(3 theta)."""
        order = max((abs(k) for k in modes), default=0) if grid_order is None else grid_order
        coeffs = np.zeros(2 * order + 1, dtype=complex)
        for k, value in modes.items():
            if abs(k) > order:
                raise ValueError(f"mode {k} exceeds grid_order={order}")
            coeffs[k + order] += value
        return cls(coeffs, order)

    @classmethod
    def cosine(cls, frequency: int, amplitude: float = 2.0) -> FourierFunction:
        """amplitude * cos(frequency * theta); the default is the perturbation 2cos(q theta)."""
        if frequency == 0:
            return cls.constant(amplitude)
        return cls.from_modes({frequency: amplitude / 2, -frequency: amplitude / 2})

    # ---- coefficient access ----
    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.grid_order, self.grid_order + 1)

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.grid_order:
            return 0j
        return complex(self.coeffs[k + self.grid_order])

    @property
    def mean(self) -> float:
        return float(self.coeffs[self.grid_order].real)

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        mismatch = np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1])))
        return bool(mismatch <= tol * scale)

    def bandwidth(self, rel_tol: float = TRIM_TOL) -> int:
        """Largest |k| whose coefficient exceeds rel_tol times the largest one."""
        mags = np.abs(self.coeffs)
        peak = float(mags.max())
        if peak == 0.0:
            return 0
        keep = np.abs(self.modes)[mags > rel_tol * peak]
        return int(keep.max()) if keep.size else 0

    def resized(self, order: int) -> FourierFunction:
        """Zero-pad or truncate to a new grid order."""
        if order == self.grid_order:
            return self
        if order > self.grid_order:
            return FourierFunction(np.pad(self.coeffs, order - self.grid_order), order)
        cut = self.grid_order - order
        return FourierFunction(self.coeffs[cut: cut + 2 * order + 1], order)

    def trimmed(self, rel_tol: float = TRIM_TOL, min_order: int = 0) -> FourierFunction:
        return self.resized(max(self.bandwidth(rel_tol), min_order))

    # ---- values ----
    def samples(self, order: int | None = None) -> np.ndarray:
        """Values at the nodes of the grid of the given order (>= grid_order)."""
        order = self.grid_order if order is None else order
        if order < self.grid_order:
            raise ValueError(f"sampling at order {order} would alias modes up to {self.grid_order}")
        return _synthesize(self.resized(order).coeffs)

    def real_samples(self, order: int | None = None) -> np.ndarray:
        return self.samples(order).real

    def evaluate(self, theta) -> np.ndarray:
        """Direct Fourier sum at arbitrary angles (complex)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return np.exp(1j * np.outer(theta, self.modes)) @ self.coeffs

    # ---- linear arithmetic ----
    def scaled(self, factor: complex) -> FourierFunction:
        return FourierFunction(self.coeffs * factor, self.grid_order)

    def _coerce(self, other) -> FourierFunction:
        if isinstance(other, FourierFunction):
            return other
        if isinstance(other, Number):
            return FourierFunction.constant(other)
        return NotImplemented

    def __add__(self, other) -> FourierFunction:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        order = max(self.grid_order, other.grid_order)
        return FourierFunction(self.resized(order).coeffs + other.resized(order).coeffs, order)

    __radd__ = __add__

    def __neg__(self) -> FourierFunction:
        return self.scaled(-1.0)

    def __sub__(self, other) -> FourierFunction:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> FourierFunction:
        return (-self) + other

    def __mul__(self, other) -> FourierFunction:
        if isinstance(other, Number):
            return self.scaled(other)
        return NotImplemented

    __rmul__ = __mul__


# --------------------------------------------------------------------
# Transforms and pointwise operations
# --------------------------------------------------------------------
def from_samples(values) -> FourierFunction:
    """Forward transform of samples at the 2M+1 uniform nodes starting at theta = 0."""
    values = np.asarray(values)
    if values.ndim != 1 or values.size % 2 == 0:
        raise ValueError(f"need an odd number of samples, got {values.size}")
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise WeightDomainError(f"non-finite sample at node {bad}")
    coeffs = fftshift(fft(values)) / values.size
    if np.isrealobj(values):
        coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1]))
    return FourierFunction(coeffs, (values.size - 1) // 2)


def check_positive(values: np.ndarray, order: int, what: str = "weight") -> None:
    j = int(np.argmin(values))
    if not values[j] > POSITIVITY_MARGIN:
        theta = grid_nodes(order)[j]
        raise WeightDomainError(
            f"{what} is not positive: value {values[j]:.3e} at node {j} (theta={theta:.6f})"
        )


def _require_real(f: FourierFunction) -> None:
    if not f.is_real():
        raise ValueError("operation needs a real-valued function (Hermitian coefficients)")


def pointwise_power(f: FourierFunction, p: float, order: int | None = None) -> FourierFunction:
    """f**p on a 2x oversampled grid, truncated to ``order`` (default max(M, 32))."""
    _require_real(f)
    out = max(f.grid_order, MIN_NONLINEAR_ORDER) if order is None else order
    grid = OVERSAMPLING * max(out, f.grid_order)
    values = f.real_samples(grid)
    check_positive(values, grid)
    return from_samples(values ** p).resized(out)


def product(f: FourierFunction, g: FourierFunction, order: int | None = None) -> FourierFunction:
    """Pointwise product with 3/2 padding, so modes up to ``order`` carry no aliasing."""
    out = max(f.grid_order, g.grid_order) if order is None else order
    width = max(out, f.grid_order, g.grid_order)
    grid = (3 * width + 1) // 2 + 1
    values = f.samples(grid) * g.samples(grid)
    if f.is_real() and g.is_real():
        values = values.real
    return from_samples(values).resized(out)


def mean_of_inverse(a: FourierFunction) -> float:
    """Trapezoid value of (1/2pi) * integral of 1/a over the circle."""
    _require_real(a)
    grid = OVERSAMPLING * max(a.grid_order, MIN_NONLINEAR_ORDER)
    values = a.real_samples(grid)
    check_positive(values, grid)
    return float(np.mean(1.0 / values))


def normalization_residual(a: FourierFunction) -> float:
    return abs(mean_of_inverse(a) - 1.0)


def normalize(a: FourierFunction) -> FourierFunction:
    """Rescale a by the mean of 1/a so the normalization condition holds."""
    return a.scaled(mean_of_inverse(a))


def hilbert_transform(f: FourierFunction) -> FourierFunction:
    """Fourier multiplier sgn(k); the mean is sent to zero."""
    return FourierFunction(f.coeffs * np.sign(f.modes), f.grid_order)


# --------------------------------------------------------------------
# Disk automorphisms
# --------------------------------------------------------------------
@dataclass(frozen=True)
class MobiusMap:
    """Psi_w(z) = (z - w) / (1 - conj(w) z), optionally composed with conjugation."""

    w: complex = 0j
    orientation: Literal["conformal", "anticonformal"] = "conformal"

    def __post_init__(self) -> None:
        w = complex(self.w)
        object.__setattr__(self, "w", w)
        if not abs(w) < 1.0:
            raise WeightDomainError(f"Mobius parameter needs |w| < 1, got |w| = {abs(w):.6f}")
        if self.orientation not in ("conformal", "anticonformal"):
            raise ValueError(f"unknown orientation {self.orientation!r}")

    def _source_angles(self, theta: np.ndarray) -> np.ndarray:
        return -theta if self.orientation == "anticonformal" else theta

    def angle(self, theta) -> np.ndarray:
        """psi(theta), unwrapped continuously from the first node."""
        z = np.exp(1j * self._source_angles(np.asarray(theta, dtype=float)))
        image = (z - self.w) / (1.0 - np.conj(self.w) * z)
        return np.unwrap(np.angle(image))

    def angular_speed(self, theta) -> np.ndarray:
        """|d psi / d theta| = (1 - |w|^2) / |1 - conj(w) e^{i theta}|^2."""
        z = np.exp(1j * self._source_angles(np.asarray(theta, dtype=float)))
        return (1.0 - abs(self.w) ** 2) / np.abs(1.0 - np.conj(self.w) * z) ** 2


def mobius_pullback(a: FourierFunction, m: MobiusMap, order: int | None = None) -> FourierFunction:
    """b = |psi'|^-1 * (a o psi); b is conformally equivalent to a and keeps its normalization."""
    _require_real(a)
    check_grid = OVERSAMPLING * max(a.grid_order, MIN_NONLINEAR_ORDER)
    check_positive(a.real_samples(check_grid), check_grid)

    out = max(2 * a.grid_order, MIN_PULLBACK_ORDER) if order is None else order
    grid = OVERSAMPLING * out
    theta = grid_nodes(grid)
    values = a.evaluate(m.angle(theta)).real / m.angular_speed(theta)
    b = from_samples(values).resized(out)
    logger.debug("pullback w=%s: order %d -> bandwidth %d", m.w, a.grid_order, b.bandwidth())
    return b.trimmed(min_order=min(out, a.grid_order))


# --------------------------------------------------------------------
# Single-mode family
# --------------------------------------------------------------------
def make_alpha_tau(r: int, tau: float) -> FourierFunction:
    """(1 - 2 tau cos((2r+1) theta))^-1 from its geometric-series coefficients.

    With q = 2 tau / (1 + sqrt(1 - 4 tau^2)) the coefficient of e^{i j (2r+1) theta}
    is q^|j| / sqrt(1 - 4 tau^2); the mean of 1/alpha is exactly 1.
    """
    if int(r) != r or r < 1:
        raise ValueError(f"r must be a positive integer, got {r!r}")
    if not abs(tau) < 0.5:
        raise WeightDomainError(f"|tau| must be < 1/2 for a positive weight, got tau={tau}")
    r = int(r)
    freq = 2 * r + 1
    if tau == 0:
        harmonics, q = 0, 0.0
    else:
        q = 2.0 * tau / (1.0 + math.sqrt(1.0 - 4.0 * tau * tau))
        harmonics = max(1, math.ceil(math.log(ALPHA_TAIL) / math.log(abs(q))))
    order = max(4 * freq, freq * (harmonics + 1))
    if order > MAX_ORDER:
        harmonics = MAX_ORDER // freq - 1
        order = freq * (harmonics + 1)
        logger.warning("alpha_tau(r=%d, tau=%g) truncated at order %d", r, tau, order)

    coeffs = np.zeros(2 * order + 1, dtype=complex)
    j = np.arange(-harmonics, harmonics + 1)
    coeffs[order + j * freq] = q ** np.abs(j) / math.sqrt(1.0 - 4.0 * tau * tau)
    return FourierFunction(coeffs, order)
