"""
app/numerics/variation.py

Closed-form variation formulas around the disk weight a = 1 and their spectral cross-checks.

Purpose
- DeformationFamily                     -> alpha_tau = normalize((1 - tau beta)^-1), alpha_0 = 1
- second_variation_zeta(beta, z)        -> d^2/dtau^2 zeta_{alpha_tau}(z) at tau = 0
- second_variation_zeta_prime(r, s)     -> its z-derivative for beta = 2cos((2r+1) theta)
- asymptotic_coefficient / asymptotic_offset -> large-r behaviour of the previous sum
- coefficient_gamma / rho / h           -> coefficient functions of the log-diagonal expansion
- log_diag_expansion / log_diag_numeric -> <ln(Lambda_a + P_0) phi_m, phi_m> at second order
- counterexample_search(s, r_max, tau, N) -> witness of non-convexity of zeta_a - 2 zeta_R on (0, 2)

Finite differences in tau are centered with Richardson extrapolation over
steps h and h/2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np
from scipy.integrate import quad

from app.errors import QuadraticRegimeError, SearchExhausted
from app.numerics.circle_fourier import (
    MIN_NONLINEAR_ORDER,
    FourierFunction,
    make_alpha_tau,
    normalize,
    pointwise_power,
)
from app.numerics.operators import SpectralFunction, SteklovDiscretization, build_discretization, quadratic_form
from app.numerics.parallel import DEFAULT_MAX_WORKERS, ordered_map
from app.numerics.spectrum import steklov_spectrum
from app.numerics.zeta import evaluate_zeta_difference, s0_root

logger = logging.getLogger(__name__)

ZERO_MEAN_TOL = 1e-12
COEFF_SUPPORT_TOL = 1e-15
QUAD_SPLIT = 1e-3                # u = 1 - x substitution on [1 - QUAD_SPLIT, 1]
REMOVABLE_BAND = 1e-6            # |2x - 1| below which the analytic limit is used
QUADRATIC_MISMATCH_TOL = 0.2
FIRST_VARIATION_STEP = 1e-4
SECOND_VARIATION_STEP = 1e-3
IMAG_RESIDUE_TOL = 1e-10


# --------------------------------------------------------------------
# Families and reports
# --------------------------------------------------------------------
def _support(beta: FourierFunction) -> np.ndarray:
    """|beta_q|^2 for q = 0..M after checking the zero-mean precondition."""
    scale = max(1.0, float(np.max(np.abs(beta.coeffs))))
    if abs(beta.coefficient(0)) > ZERO_MEAN_TOL * scale:
        raise ValueError(f"beta must have zero mean, got mean {beta.coefficient(0):.3e}")
    b = beta.trimmed(COEFF_SUPPORT_TOL)
    return np.abs(b.coeffs[b.grid_order:]) ** 2


@dataclass(frozen=True, eq=False)
class DeformationFamily:
    kind: Literal["single_mode", "general"]
    beta: FourierFunction
    r: int | None = None

    def __post_init__(self) -> None:
        _support(self.beta)
        if self.kind == "single_mode" and (self.r is None or self.r < 1):
            raise ValueError("single_mode family needs r >= 1")

    @classmethod
    def single_mode(cls, r: int) -> DeformationFamily:
        return cls("single_mode", FourierFunction.cosine(2 * r + 1), r=r)

    @classmethod
    def general(cls, beta: FourierFunction) -> DeformationFamily:
        return cls("general", beta)

    def weight(self, tau: float) -> FourierFunction:
        if tau == 0:
            return FourierFunction.constant(1.0)
        if self.kind == "single_mode":
            return make_alpha_tau(self.r, tau)
        order = max(8 * self.beta.bandwidth(), 2 * MIN_NONLINEAR_ORDER)
        return normalize(pointwise_power(1.0 - tau * self.beta, -1.0, order=order))


@dataclass(frozen=True)
class VariationReport:
    closed_form: float
    finite_difference: float
    tau_step: float
    relative_error: float
    quantity: str = ""
    parameter: float = 0.0

    @classmethod
    def compare(cls, closed_form: float, finite_difference: float, tau_step: float, quantity: str = "", parameter: float = 0.0) -> VariationReport:
        error = abs(closed_form - finite_difference) / max(1.0, abs(closed_form))
        return cls(float(closed_form), float(finite_difference), float(tau_step), float(error), quantity, float(parameter))

    def as_row(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------
def second_variation_zeta(beta: FourierFunction, z: float) -> float:
    """4z sum_{p != n} (n^-z - p^-z)/(p^2 - n^2) p n |b_{p+n}|^2 + 2z^2 sum_n n^-z |b_{2n}|^2."""
    power = _support(beta)
    M = power.size - 1
    total = 0.0
    for q in range(2, M + 1):
        if power[q] == 0.0:
            continue
        p = np.arange(1, q, dtype=float)
        n = q - p
        off = p != n
        p, n = p[off], n[off]
        total += 4.0 * z * power[q] * float(np.sum((n ** -z - p ** -z) / (p * p - n * n) * p * n))
    n = np.arange(1, M // 2 + 1, dtype=float)
    total += 2.0 * z * z * float(np.sum(n ** -z * power[2 * n.astype(int)]))
    return total


def second_variation_zeta_prime(r: int, s: float) -> float:
    """d/dz of second_variation_zeta(2cos((2r+1) theta), z) at z = s."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    q = 2 * r + 1
    p = np.arange(r + 1, 2 * r + 1, dtype=float)
    n = q - p
    bracket = p ** -s * (-1.0 + s * np.log(p)) - n ** -s * (-1.0 + s * np.log(n))
    return 8.0 / q * float(np.sum(p * n / (2.0 * p - q) * bracket))


def rescaled_second_variation_prime(r: int, s: float) -> float:
    """(2r+1)/8 times the previous sum; tends to zeta_R(s-1) + s zeta_R'(s-1) for s > 2."""
    return (2 * r + 1) / 8.0 * second_variation_zeta_prime(r, s)


def _check_open_interval(s: float) -> None:
    if not 0.0 < s < 2.0:
        raise ValueError(f"s must lie in (0, 2), got {s}")


def _half_to_one(bulk, near_one_smooth, near_one_weighted) -> float:
    """int_{1/2}^{1} split at 1 - QUAD_SPLIT; the end piece is written in u = 1 - x."""
    total, _ = quad(bulk, 0.5, 1.0 - QUAD_SPLIT, epsabs=1e-14, epsrel=1e-12, limit=200)
    smooth, _ = quad(near_one_smooth, 0.0, QUAD_SPLIT, epsabs=1e-15, epsrel=1e-12)
    total += smooth
    for func, weight, wvar in near_one_weighted:
        piece, _ = quad(func, 0.0, QUAD_SPLIT, weight=weight, wvar=wvar, epsabs=1e-15, epsrel=1e-12)
        total += piece
    return total


def asymptotic_coefficient(s: float) -> float:
    """s int_{1/2}^1 x(1-x)/(2x-1) (x^-s - (1-x)^-s) dx, strictly negative on (0, 2)."""
    _check_open_interval(s)

    def bulk(x: float) -> float:
        if abs(2.0 * x - 1.0) < REMOVABLE_BAND:
            return -s * 2.0 ** (s - 1.0)
        return x * (1.0 - x) / (2.0 * x - 1.0) * (x ** -s - (1.0 - x) ** -s)

    def smooth(u: float) -> float:
        return u * (1.0 - u) ** (1.0 - s) / (1.0 - 2.0 * u)

    def singular(u: float) -> float:
        return -(1.0 - u) / (1.0 - 2.0 * u)

    return s * _half_to_one(bulk, smooth, [(singular, "alg", (1.0 - s, 0.0))])


def asymptotic_offset(s: float) -> float:
    """int_{1/2}^1 x(1-x)/(2x-1) [x^-s (-1 + s ln x) - (1-x)^-s (-1 + s ln(1-x))] dx."""
    _check_open_interval(s)

    def bracket(x: float) -> float:
        return x ** -s * (-1.0 + s * math.log(x))

    def bulk(x: float) -> float:
        if abs(2.0 * x - 1.0) < REMOVABLE_BAND:
            return s * 2.0 ** (s - 1.0) * (2.0 + s * math.log(2.0))
        return x * (1.0 - x) / (2.0 * x - 1.0) * (bracket(x) - bracket(1.0 - x))

    def smooth(u: float) -> float:
        return u * (1.0 - u) / (1.0 - 2.0 * u) * bracket(1.0 - u)

    def g(u: float) -> float:
        return (1.0 - u) / (1.0 - 2.0 * u)

    return _half_to_one(
        bulk,
        smooth,
        [
            (g, "alg", (1.0 - s, 0.0)),
            (lambda u: -s * g(u), "alg-loga", (1.0 - s, 0.0)),
        ],
    )


def coefficient_gamma(p: int, m: int) -> float:
    if p < 1 or m < 1:
        raise ValueError(f"gamma needs positive integers, got p={p}, m={m}")
    if p == m:
        raise ValueError("gamma is undefined for p = m")
    if p > m:
        return -coefficient_gamma(m, p)
    p, m = float(p), float(m)
    return p * m * (2.0 * math.log(p / m) * m * p + (p + m) * (m - p)) / ((m - p) ** 2 * (m + p) ** 2)


def coefficient_rho(n: int, p: int, s: float) -> float:
    """int_0^s max(|n|,1)^t max(|p|,1)^(s-t) dt."""
    if not s > 0:
        raise ValueError(f"rho needs s > 0, got {s}")
    bn, bp = max(abs(n), 1), max(abs(p), 1)
    if bn == bp:
        return s * bp ** s
    return (bn ** s - bp ** s) / (math.log(bn) - math.log(bp))


def coefficient_h(m: int, p: int) -> float:
    if m < 1:
        raise ValueError(f"h needs m >= 1, got {m}")
    bp = max(abs(p), 1)
    if bp == m:
        return 1.0 / (2.0 * m * m)
    return (math.log(m) - math.log(bp)) / (m - bp) ** 2 - 1.0 / (m * (m - bp))


def log_diag_expansion(m: int, beta: FourierFunction) -> float:
    """sum_{p > 0, p != m} gamma(p, m) |b_{m+p}|^2."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    power = _support(beta)
    total = 0.0
    for p in range(1, power.size - m):
        if p != m and power[m + p] != 0.0:
            total += coefficient_gamma(p, m) * power[m + p]
    return total


# --------------------------------------------------------------------
# Quantities on the discretization
# --------------------------------------------------------------------
def _discretize(a: FourierFunction, N: int, discretization: SteklovDiscretization | None) -> SteklovDiscretization:
    return discretization or build_discretization(a, N)


def log_diag_numeric(a: FourierFunction, m: int, N: int, discretization: SteklovDiscretization | None = None) -> float:
    """Re <ln(Lambda_a + P_0) phi_m, phi_m>."""
    if m < 1 or m > N / 4:
        raise ValueError(f"need 1 <= m <= N/4, got m={m}, N={N}")
    disc = _discretize(a, N, discretization)
    value = quadratic_form(disc.function_of_shifted(SpectralFunction.log()), disc.phi(m), disc.phi(m))
    if abs(value.imag) > IMAG_RESIDUE_TOL:
        logger.warning("log-diagonal for m=%d has imaginary residue %.2e", m, value.imag)
    return float(value.real)


def phi_moment(a: FourierFunction, n: int, s: float, N: int, discretization: SteklovDiscretization | None = None) -> float:
    """Re <(Lambda_a + P_0)^s phi_n, phi_n>."""
    disc = _discretize(a, N, discretization)
    return float(quadratic_form(disc.function_of_shifted(SpectralFunction.power(s)), disc.phi(n), disc.phi(n)).real)


def prop4_summands(a: FourierFunction, s: float, N: int, discretization: SteklovDiscretization | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode terms <A^s ln^2 A phi_n, phi_n> - |n|^s ln^2 |n| of (zeta_a - 2 zeta_R)''(-s), n != 0."""
    disc = _discretize(a, N, discretization)
    G = disc.function_of_shifted(SpectralFunction.power_log(s, 2))
    modes = disc.trusted_phi_modes()
    modes = modes[modes != 0]
    diagonal = disc.phi_diagonal(G, modes).real
    base = np.abs(modes).astype(float)
    return modes, diagonal - base ** s * np.log(base) ** 2


@dataclass(frozen=True)
class LogDiagComparison:
    m: int
    tau: float
    numeric_shift: float
    predicted_shift: float

    @property
    def ratio(self) -> float:
        return self.numeric_shift / self.predicted_shift


def log_diag_check(family: DeformationFamily, m: int, tau: float, N: int) -> LogDiagComparison:
    """numeric log-diagonal minus ln m against 2 tau^2 log_diag_expansion."""
    numeric = log_diag_numeric(family.weight(tau), m, N)
    return LogDiagComparison(
        m=m,
        tau=float(tau),
        numeric_shift=numeric - math.log(m),
        predicted_shift=2.0 * tau * tau * log_diag_expansion(m, family.beta),
    )


# --------------------------------------------------------------------
# Spectral finite differences in tau
# --------------------------------------------------------------------
def _zeta_along(family: DeformationFamily, z: float, N: int, m: int = 0):
    def value(tau: float) -> float:
        spectrum = steklov_spectrum(family.weight(tau), N)
        return evaluate_zeta_difference(spectrum, z, m).value

    return value


def second_variation_check(family: DeformationFamily, z: float, N: int, tau_step: float = SECOND_VARIATION_STEP) -> VariationReport:
    f = _zeta_along(family, z, N)
    f0 = f(0.0)

    def centered(h: float) -> float:
        return (f(h) - 2.0 * f0 + f(-h)) / (h * h)

    fd = (4.0 * centered(tau_step / 2) - centered(tau_step)) / 3.0
    return VariationReport.compare(second_variation_zeta(family.beta, z), fd, tau_step, "second_variation_zeta", z)


def first_variation_check(family: DeformationFamily, z: float, N: int, tau_step: float = FIRST_VARIATION_STEP) -> VariationReport:
    f = _zeta_along(family, z, N)
    fd = (f(tau_step) - f(-tau_step)) / (2.0 * tau_step)
    return VariationReport.compare(0.0, fd, tau_step, "first_variation_zeta", z)


# --------------------------------------------------------------------
# Non-convexity witness
# --------------------------------------------------------------------
@dataclass(frozen=True)
class CounterexampleReport:
    s: float
    tau: float
    r_found: int
    first_negative_r: int
    diff2_value: float
    spectral_diff1: float
    spectral_diff1_at_zero: float
    predicted_diff1: float
    relative_mismatch: float
    truncation_order: int
    exploratory: bool

    def as_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _Verification:
    r: int
    closed_form: float
    diff1: float
    diff1_at_zero: float
    predicted: float
    mismatch: float


def _verify_single_mode(r: int, s: float, tau: float, N: int) -> _Verification:
    closed = second_variation_zeta_prime(r, s)
    spectrum = steklov_spectrum(make_alpha_tau(r, tau), N)
    d1 = evaluate_zeta_difference(spectrum, s, 1).value
    d1_zero = evaluate_zeta_difference(spectrum, 0.0, 1).value
    predicted = 0.5 * tau * tau * closed
    mismatch = abs(d1 - predicted) / abs(predicted)
    logger.info("r=%d: diff'(%.3g)=%.4e predicted %.4e (mismatch %.1f%%)", r, s, d1, predicted, 100 * mismatch)
    return _Verification(r, closed, d1, d1_zero, predicted, mismatch)


def counterexample_search(
    s: float,
    r_max: int,
    tau: float,
    N: int,
    max_workers: int | None = None,
) -> CounterexampleReport:
    """First single-mode family whose spectral (zeta - 2 zeta_R)'(s) is negative."""
    exploratory = False
    if not 0.0 < s < 2.0:
        if 2.0 < s < s0_root():
            exploratory = True
            logger.warning("s=%g lies in (2, s0): exploratory search, no guaranteed r", s)
        else:
            raise ValueError(f"s must lie in (0, 2) or (2, s0), got {s}")
    if not 0.0 < tau <= 0.02:
        raise ValueError(f"tau must lie in (0, 0.02], got {tau}")

    candidates = [r for r in range(1, r_max + 1) if second_variation_zeta_prime(r, s) < 0.0]
    if not candidates:
        raise SearchExhausted(f"second variation of zeta' stays >= 0 for r <= {r_max}; raise r_max")
    first_negative = candidates[0]
    if N < 8 * (2 * first_negative + 1):
        logger.warning("N=%d is small for frequency %d", N, 2 * first_negative + 1)

    batch = max(1, DEFAULT_MAX_WORKERS if max_workers is None else max_workers)
    regime_failures = []
    for start in range(0, len(candidates), batch):
        chunk = candidates[start: start + batch]
        results = ordered_map(lambda r: _verify_single_mode(r, s, tau, N), chunk, max_workers=max_workers)
        for v in results:
            if v.mismatch > QUADRATIC_MISMATCH_TOL:
                regime_failures.append(v)
                continue
            if v.diff1 < 0.0:
                return CounterexampleReport(
                    s=float(s),
                    tau=float(tau),
                    r_found=v.r,
                    first_negative_r=first_negative,
                    diff2_value=v.closed_form,
                    spectral_diff1=v.diff1,
                    spectral_diff1_at_zero=v.diff1_at_zero,
                    predicted_diff1=v.predicted,
                    relative_mismatch=v.mismatch,
                    truncation_order=N,
                    exploratory=exploratory,
                )
    if regime_failures:
        worst = min(regime_failures, key=lambda v: v.mismatch)
        raise QuadraticRegimeError(
            f"spectral and second-order values disagree by {100 * worst.mismatch:.1f}% at best (r={worst.r}); lower tau"
        )
    raise SearchExhausted(f"no spectral witness for r <= {r_max}; raise r_max")
