"""
app/numerics/zeta.py

Riemann zeta derivatives on the real axis and the paired differences
(d/ds)^m (zeta_a - 2 zeta_R)(s) = sum_k [lambda_k^-s (-ln lambda_k)^m - mu_k^-s (-ln mu_k)^m],
mu_k = floor((k+1)/2), summed term by term in the paired order.

Purpose
- riemann_zeta_deriv(x, m)          -> Euler-Maclaurin, cutoff 50, 8 Bernoulli corrections;
                                       reflected through the functional equation below x = -1/2
- zeta_diff_deriv(a, s, m, N)       -> ZetaEvaluation with an extrapolated tail
- zeta_diff_trace(a, s, m, N)       -> the same quantity through the phi_n trace
- convexity_scan(a, s_grid, N)      -> rows (s, diff, diff1, diff2, tail)
- s0_root()                         -> first root above 2 of zeta(s-1) + s zeta'(s-1)
- estimate_s_a(a, N)                -> start of the region where diff'' stays positive
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import bisect
from scipy.special import bernoulli, digamma, gamma, polygamma

from app.errors import SearchExhausted, TruncationRejected, WeightDomainError
from app.numerics.circle_fourier import FourierFunction
from app.numerics.operators import SpectralFunction, SteklovDiscretization, build_discretization
from app.numerics.parallel import ordered_map
from app.numerics.spectrum import SpectrumResult, disk_eigenvalues, steklov_spectrum
from app.numerics.tails import extrapolated_tail

logger = logging.getLogger(__name__)

# --------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------
EM_CUTOFF = 50
EM_TERMS = 8
REFLECT_BELOW = -0.5             # direct sums cancel catastrophically further left
ZETA_TAIL_TOL = 1e-6             # relative to max(1, |value|)
SNAP_FACTOR = 100.0              # roundoff floor = SNAP_FACTOR * eps * lambda_max
MIN_TRUSTED = 4
S0_BRACKET = (2.5, 4.0)
S0_RESIDUAL_TOL = 1e-10
WEINSTOCK_TOL = 1e-6
S_A_STEP = 0.25
S_A_WINDOW = 10.0
S_A_STOP = 60.0

_BERNOULLI = bernoulli(2 * EM_TERMS)
# (B_2j / (2j)!, rising product x (x+1) ... (x+2j-2)) for j = 1..EM_TERMS
_EM_CORRECTIONS = [
    (float(_BERNOULLI[2 * j]) / math.factorial(2 * j), Polynomial.fromroots(-np.arange(2 * j - 1)))
    for j in range(1, EM_TERMS + 1)
]


def riemann_zeta_deriv(x: float, m: int = 0) -> float:
    """zeta_R^(m)(x) for m in {0, 1, 2}, every real x except the pole at 1."""
    if m not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {m}")
    x = float(x)
    if x == 1.0:
        raise ValueError("zeta_R has a pole at x = 1")
    if x < REFLECT_BELOW:
        return _reflected_zeta_deriv(x, m)
    return _euler_maclaurin(x, m)


def _euler_maclaurin(x: float, m: int) -> float:
    n = np.arange(1, EM_CUTOFF, dtype=float)
    total = float(np.sum((-np.log(n)) ** m * n ** (-x)))

    cut = float(EM_CUTOFF)
    L = math.log(cut)
    u = cut ** (1.0 - x)
    v = x - 1.0
    if m == 0:
        total += u / v
    elif m == 1:
        total += -L * u / v - u / v ** 2
    else:
        total += L * L * u / v + 2.0 * L * u / v ** 2 + 2.0 * u / v ** 3
    total += 0.5 * (-L) ** m * cut ** (-x)

    for j, (coef, rising) in enumerate(_EM_CORRECTIONS, start=1):
        power = cut ** (-x - 2 * j + 1)
        acc = sum(math.comb(m, i) * rising.deriv(i)(x) * (-L) ** (m - i) for i in range(m + 1))
        total += coef * acc * power
    return float(total)


def _reflected_zeta_deriv(x: float, m: int) -> float:
    """Leibniz rule on zeta(x) = (2 pi)^x / pi * sin(pi x / 2) * Gamma(1-x) * zeta(1-x)."""
    y = 1.0 - x
    c = math.log(2.0 * math.pi)
    prefactor = math.exp(c * x) / math.pi
    half_pi = 0.5 * math.pi
    sine, cosine = math.sin(half_pi * x), math.cos(half_pi * x)
    g, psi = float(gamma(y)), float(digamma(y))

    # k-th x-derivatives of each factor, k = 0..m
    factors = (
        [prefactor * c ** k for k in range(m + 1)],
        [sine, half_pi * cosine, -half_pi ** 2 * sine][: m + 1],
        [g, -g * psi, g * (psi ** 2 + float(polygamma(1, y)))][: m + 1],
        [(-1) ** k * _euler_maclaurin(y, k) for k in range(m + 1)],
    )
    total = 0.0
    for orders in itertools.product(range(m + 1), repeat=4):
        if sum(orders) != m:
            continue
        weight = math.factorial(m) / math.prod(math.factorial(k) for k in orders)
        total += weight * math.prod(f[k] for f, k in zip(factors, orders))
    return float(total)


def s0_function(s: float) -> float:
    """g(s) = zeta_R(s-1) + s zeta_R'(s-1)."""
    return riemann_zeta_deriv(s - 1.0, 0) + s * riemann_zeta_deriv(s - 1.0, 1)


def s0_root() -> float:
    lo, hi = S0_BRACKET
    g_lo, g_hi = s0_function(lo), s0_function(hi)
    if not (g_lo < 0.0 < g_hi):
        raise SearchExhausted(f"no sign change of g on [{lo}, {hi}]: g={g_lo:.3e}, {g_hi:.3e}")
    root = bisect(s0_function, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    residual = abs(s0_function(root))
    if residual > S0_RESIDUAL_TOL:
        logger.warning("s0 residual %.3e above %.0e", residual, S0_RESIDUAL_TOL)
    logger.info("s0 = %.12f (residual %.2e)", root, residual)
    return float(root)


# --------------------------------------------------------------------
# Paired spectral sums
# --------------------------------------------------------------------
@dataclass(frozen=True)
class ZetaEvaluation:
    s: float
    deriv_order: int
    value: float
    truncation_index: int
    tail_estimate: float

    def as_row(self) -> dict:
        return {
            "s": self.s,
            "deriv_order": self.deriv_order,
            "value": self.value,
            "truncation_index": self.truncation_index,
            "tail": self.tail_estimate,
        }


def _power_log(x: np.ndarray, s: float, m: int) -> np.ndarray:
    return x ** (-s) * (-np.log(x)) ** m


def _power_log_slope(x: np.ndarray, s: float, m: int) -> np.ndarray:
    """Bound on |d/dx [x^-s (-ln x)^m]|."""
    ell = np.abs(np.log(x))
    return x ** (-s - 1.0) * (abs(s) * ell ** m + m * ell ** max(m - 1, 0))


def roundoff_floor(spectrum: SpectrumResult) -> float:
    return SNAP_FACTOR * np.finfo(float).eps * max(1.0, spectrum.lambda_max)


def _check_tail(evaluation: ZetaEvaluation, what: str) -> ZetaEvaluation:
    limit = ZETA_TAIL_TOL * max(1.0, abs(evaluation.value))
    if not evaluation.tail_estimate < limit:
        raise TruncationRejected(
            f"{what} at s={evaluation.s}, m={evaluation.deriv_order}: tail {evaluation.tail_estimate:.3e} "
            f"exceeds {limit:.3e} with K={evaluation.truncation_index}; raise N"
        )
    return evaluation


def evaluate_zeta_difference(spectrum: SpectrumResult, s: float, m: int, check_tail: bool = True) -> ZetaEvaluation:
    """Paired sum over the trusted prefix of an already computed spectrum."""
    if m not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {m}")
    K = spectrum.trusted_count
    if K < MIN_TRUSTED:
        raise TruncationRejected(f"only {K} trusted eigenvalues; raise N")
    k = np.arange(1, K + 1)
    lam = spectrum.eigenvalues[1: K + 1]
    mu = disk_eigenvalues(k)
    if lam[0] <= 0.0:
        raise TruncationRejected(f"lambda_1 = {lam[0]:.3e} is not positive; raise N")

    diff = lam - mu
    significant = np.abs(diff) > roundoff_floor(spectrum)
    terms = np.where(significant, _power_log(lam, s, m) - _power_log(mu, s, m), 0.0)
    value = float(np.sum(terms))
    tail = extrapolated_tail(k, diff, significant, lambda kk: _power_log_slope(disk_eigenvalues(kk), s, m))
    evaluation = ZetaEvaluation(s=float(s), deriv_order=m, value=value, truncation_index=K, tail_estimate=tail)
    return _check_tail(evaluation, "zeta difference") if check_tail else evaluation


def zeta_diff_deriv(
    a: FourierFunction,
    s: float,
    m: int,
    N: int,
    spectrum: SpectrumResult | None = None,
) -> ZetaEvaluation:
    spectrum = spectrum or steklov_spectrum(a, N)
    return evaluate_zeta_difference(spectrum, s, m)


def zeta_diff_trace(
    a: FourierFunction,
    s: float,
    m: int,
    N: int,
    discretization: SteklovDiscretization | None = None,
) -> ZetaEvaluation:
    """(-1)^m sum_n [<f(A) phi_n, phi_n> - f(max(|n|,1))], f = x^-s ln^m x, A = Lambda_a + P_0."""
    if m not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {m}")
    disc = discretization or build_discretization(a, N)
    f = SpectralFunction.power_log(-s, m)
    G = disc.function_of_shifted(f)
    modes = disc.trusted_phi_modes()
    diagonal = disc.phi_diagonal(G, modes).real
    reference = f(np.maximum(np.abs(modes), 1).astype(float))
    summands = (-1) ** m * (diagonal - reference)

    K = int(modes[-1]) if modes.size else 0
    n = np.arange(0, K + 1)
    folded = summands[K + n] + np.where(n > 0, summands[(K - n)], 0.0)
    floor = 64 * np.finfo(float).eps * disc.dimension * np.maximum(np.abs(reference[K + n]), 1.0)
    significant = np.abs(folded) > floor
    tail = extrapolated_tail(n, folded, significant, lambda kk: np.ones_like(kk))
    evaluation = ZetaEvaluation(s=float(s), deriv_order=m, value=float(np.sum(folded)), truncation_index=K, tail_estimate=tail)
    return _check_tail(evaluation, "trace form")


# --------------------------------------------------------------------
# Scans
# --------------------------------------------------------------------
@dataclass(frozen=True)
class ConvexityRow:
    s: float
    diff: float
    diff1: float
    diff2: float
    tail: float

    def as_row(self) -> dict:
        return {"s": self.s, "diff": self.diff, "diff1": self.diff1, "diff2": self.diff2, "tail": self.tail}


def convexity_scan(
    a: FourierFunction,
    s_grid: Sequence[float],
    N: int,
    spectrum: SpectrumResult | None = None,
    max_workers: int | None = None,
) -> list[ConvexityRow]:
    """diff, diff' and diff'' at every grid point from one shared spectrum."""
    spectrum = spectrum or steklov_spectrum(a, N)

    def _row(s: float) -> ConvexityRow:
        evals = [evaluate_zeta_difference(spectrum, s, m) for m in (0, 1, 2)]
        return ConvexityRow(
            s=float(s),
            diff=evals[0].value,
            diff1=evals[1].value,
            diff2=evals[2].value,
            tail=max(e.tail_estimate for e in evals),
        )

    return ordered_map(_row, s_grid, max_workers=max_workers)


def estimate_s_a(
    a: FourierFunction,
    N: int,
    spectrum: SpectrumResult | None = None,
    start: float = 0.0,
    stop: float = S_A_STOP,
    step: float = S_A_STEP,
    window: float = S_A_WINDOW,
) -> float:
    """Smallest grid point s with diff'' > 0 at every grid point of [s, s + window]."""
    spectrum = spectrum or steklov_spectrum(a, N)
    gap = 1.0 - float(spectrum.eigenvalues[1])
    if gap <= WEINSTOCK_TOL:
        raise WeightDomainError(f"weinstock gap {gap:.2e} below {WEINSTOCK_TOL:g}: weight is a disk numerically")

    grid = start + step * np.arange(int(round((stop - start) / step)) + 1)
    values = np.array([evaluate_zeta_difference(spectrum, s, 2).value for s in grid])
    positive = values > 0.0
    span = int(round(window / step))
    for i in range(grid.size - span):
        if positive[i: i + span + 1].all():
            return float(grid[i])
    raise SearchExhausted(f"diff'' never stays positive over a window of {window} in [{start}, {stop}]")
