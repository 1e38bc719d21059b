"""
app/numerics/flow.py

Deformation flow d(alpha)/dtau = -alpha * Lambda(alpha) + H(alpha) * D(alpha), which drives a
normalized weight to the disk weight 1, and the trace functionals monitored along it.

Purpose
- flow_rhs(alpha, N)                  -> right-hand side at spatial order N (dealiased products)
- flow_integrate(alpha0, tau_end, dt, N) -> monitored FlowState sequence (RK4, renormalized)
- defect_trace(disc, f)               -> Tr f(Lambda_a + P_0)(Lambda_a^2 - D_a^2) over the phi_n basis
- snd_der_trace(a, N)                 -> the f = x^-1 ln x case, >= 0
- trace_identity_check(a, s, N, m)    -> flow derivative of zeta vs its trace formula

Lambda, H and D are the multipliers |k|, sgn(k) and k. With H alpha = i alpha~ the right
side is (alpha~/alpha)' times -alpha^2, so the mean of 1/alpha is conserved; each accepted
step is still renormalized.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from app.errors import FlowBreakdown, TruncationRejected, WeightDomainError
from app.numerics.circle_fourier import (
    FourierFunction,
    check_positive,
    normalization_residual,
    normalize,
    product,
)
from app.numerics.operators import SpectralFunction, SteklovDiscretization, build_discretization
from app.numerics.spectrum import steklov_spectrum
from app.numerics.tails import extrapolated_tail
from app.numerics.variation import VariationReport
from app.numerics.zeta import ZETA_TAIL_TOL, evaluate_zeta_difference

logger = logging.getLogger(__name__)

# --------------------------------------------------------------------
# Stepping policy
# --------------------------------------------------------------------
FLOW_DT = 0.01
FLOW_MONITOR_SPACING = 0.5       # tau between monitored states by default
MIN_FLOW_ORDER = 32
POSITIVITY_STEP_MARGIN = 1e-6
MIN_DT = 1e-8
RK4_STABILITY = 2.5              # dt * order * sup(|alpha| + |H alpha|) must stay below this
FD_STEP = 1e-3


def flow_order(alpha: FourierFunction, resolution: int | None = None) -> int:
    """Spatial order used to integrate from alpha."""
    if resolution is not None:
        return int(resolution)
    return max(alpha.trimmed().grid_order, MIN_FLOW_ORDER)


def _real_part(f: FourierFunction) -> FourierFunction:
    return FourierFunction(0.5 * (f.coeffs + np.conj(f.coeffs[::-1])), f.grid_order)


def flow_rhs(alpha: FourierFunction, N: int) -> FourierFunction:
    a = alpha.resized(N)
    check_positive(a.real_samples(), N, "flow state")
    k = a.modes
    c = a.coeffs
    lam = FourierFunction(np.abs(k) * c, N)
    hil = FourierFunction(np.sign(k) * c, N)
    der = FourierFunction(k * c, N)
    rhs = product(hil, der, order=N) - product(a, lam, order=N)
    return _real_part(rhs)


def rk4_step(alpha: FourierFunction, dt: float, N: int) -> FourierFunction:
    """One classical fourth-order step (negative dt steps backwards)."""
    a = alpha.resized(N)
    k1 = flow_rhs(a, N)
    k2 = flow_rhs(a + (dt / 2) * k1, N)
    k3 = flow_rhs(a + (dt / 2) * k2, N)
    k4 = flow_rhs(a + dt * k3, N)
    return a + (dt / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# --------------------------------------------------------------------
# Trace functionals
# --------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class TraceEvaluation:
    value: float
    modes: np.ndarray
    summands: np.ndarray          # folded over +-n, indexed by n = 0..K
    tail_estimate: float


def defect_trace(disc: SteklovDiscretization, f: SpectralFunction) -> TraceEvaluation:
    """sum_n <f(A) Lambda_a^2 phi_n, phi_n> - n^2 <f(A) phi_n, phi_n>, A = Lambda_a + P_0."""
    G = disc.function_of_shifted(f)
    modes = disc.trusted_phi_modes()
    cols = disc.phi_basis[:, modes + disc.truncation_order]
    with_square = np.einsum("ij,ij->j", cols.conj(), G @ (disc.lambda_squared @ cols))
    plain = (modes.astype(float) ** 2) * np.einsum("ij,ij->j", cols.conj(), G @ cols)
    raw = (with_square - plain).real

    K = int(modes[-1]) if modes.size else 0
    n = np.arange(0, K + 1)
    folded = raw[K + n] + np.where(n > 0, raw[K - n], 0.0)
    scale = np.abs(with_square[K + n]) + np.abs(plain[K + n])
    floor = 64 * np.finfo(float).eps * disc.dimension * np.maximum(scale, 1.0)
    tail = extrapolated_tail(n, folded, np.abs(folded) > floor, lambda kk: np.ones_like(kk))
    return TraceEvaluation(value=float(np.sum(folded)), modes=modes, summands=folded, tail_estimate=tail)


def _checked(trace: TraceEvaluation, what: str) -> TraceEvaluation:
    limit = ZETA_TAIL_TOL * max(1.0, abs(trace.value))
    if not trace.tail_estimate < limit:
        raise TruncationRejected(f"{what}: trace tail {trace.tail_estimate:.3e} exceeds {limit:.3e}; raise N")
    return trace


def snd_der_trace(
    a: FourierFunction,
    N: int,
    discretization: SteklovDiscretization | None = None,
    check_tail: bool = True,
) -> float:
    """Tr(ln(A) A^-1 (Lambda_a^2 - D_a^2)); nonnegative, zero exactly at the disk."""
    disc = discretization or build_discretization(a, N)
    trace = defect_trace(disc, SpectralFunction.power_log(-1.0, 1))
    if check_tail:
        _checked(trace, "snd_der_trace")
    elif not trace.tail_estimate < ZETA_TAIL_TOL * max(1.0, abs(trace.value)):
        logger.warning("snd_der_trace tail %.2e at N=%d", trace.tail_estimate, N)
    return trace.value


def trace_identity_rhs(disc: SteklovDiscretization, s: float, m: int = 0) -> float:
    """s T^(m)(s) + m T^(m-1)(s), T(s) = Tr(A^(-s-1)(Lambda_a^2 - D_a^2))."""

    def T(j: int) -> float:
        trace = _checked(defect_trace(disc, SpectralFunction.power_log(-s - 1.0, j)), "trace identity")
        return (-1) ** j * trace.value

    value = s * T(m)
    if m > 0:
        value += m * T(m - 1)
    return value


def trace_identity_check(
    a: FourierFunction,
    s: float,
    N: int,
    m: int = 0,
    tau_step: float = FD_STEP,
    resolution: int | None = None,
) -> VariationReport:
    """Centered flow derivative of (d/ds)^m (zeta_a - 2 zeta_R)(s) against its trace formula."""
    if m not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {m}")
    closed = trace_identity_rhs(build_discretization(a, N), s, m)
    order = flow_order(a, resolution)

    def value(h: float) -> float:
        moved = normalize(rk4_step(a, h, order))
        return evaluate_zeta_difference(steklov_spectrum(moved, N), s, m).value

    def centered(h: float) -> float:
        return (value(h) - value(-h)) / (2.0 * h)

    fd = (4.0 * centered(tau_step / 2) - centered(tau_step)) / 3.0
    return VariationReport.compare(closed, fd, tau_step, f"flow_derivative_m{m}", s)


# --------------------------------------------------------------------
# Integration
# --------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FlowState:
    tau: float
    alpha: FourierFunction
    normalization_residual: float
    zeta2_at_0: float
    sup_distance_to_one: float
    snd_der_trace: float | None = None
    normalization_drift: float = 0.0
    dt: float = FLOW_DT

    def as_log_record(self) -> dict:
        return {
            "tau": self.tau,
            "residual": self.normalization_residual,
            "zeta2_at_0": self.zeta2_at_0,
            "sup_dist": self.sup_distance_to_one,
            "snd_der_trace": self.snd_der_trace,
        }


def _sup_distance(alpha: FourierFunction) -> float:
    return float(np.max(np.abs(alpha.real_samples(2 * alpha.grid_order) - 1.0)))


def _monitor(tau: float, alpha: FourierFunction, N: int, with_trace: bool, drift: float, dt: float) -> FlowState:
    disc = build_discretization(alpha, N)
    zeta2 = evaluate_zeta_difference(steklov_spectrum(alpha, N, discretization=disc), 0.0, 2, check_tail=False)
    if not zeta2.tail_estimate < ZETA_TAIL_TOL * max(1.0, abs(zeta2.value)):
        logger.warning("tau=%.3f: zeta'' tail %.2e at N=%d", tau, zeta2.tail_estimate, N)
    trace = snd_der_trace(alpha, N, discretization=disc, check_tail=False) if with_trace else None
    state = FlowState(
        tau=float(tau),
        alpha=alpha,
        normalization_residual=normalization_residual(alpha),
        zeta2_at_0=zeta2.value,
        sup_distance_to_one=_sup_distance(alpha),
        snd_der_trace=trace,
        normalization_drift=drift,
        dt=dt,
    )
    logger.info("tau=%.3f sup|alpha-1|=%.3e zeta''(0) diff=%.6e", state.tau, state.sup_distance_to_one, state.zeta2_at_0)
    return state


def flow_integrate(
    alpha0: FourierFunction,
    tau_end: float,
    dt: float = FLOW_DT,
    N: int = 96,
    resolution: int | None = None,
    monitor_every: int | None = None,
    with_trace: bool = True,
    on_state: Callable[[FlowState], None] | None = None,
) -> list[FlowState]:
    """Integrate from alpha0 to tau_end, monitoring every ``monitor_every`` accepted steps."""
    if tau_end < 0 or dt <= 0:
        raise ValueError(f"need tau_end >= 0 and dt > 0, got tau_end={tau_end}, dt={dt}")
    order = flow_order(alpha0, resolution)
    alpha = normalize(alpha0.resized(order))

    sup = float(np.max(np.abs(alpha.real_samples()) + np.abs(FourierFunction(np.sign(alpha.modes) * alpha.coeffs, order).samples())))
    stable = RK4_STABILITY / (order * sup)
    if dt > stable:
        logger.warning("dt=%g above the explicit stability bound %.3g at order %d; reducing", dt, stable, order)
        dt = 0.9 * stable
    every = monitor_every or max(1, int(round(FLOW_MONITOR_SPACING / dt)))

    def emit(state: FlowState) -> FlowState:
        if on_state is not None:
            on_state(state)
        return state

    states = [emit(_monitor(0.0, alpha, N, with_trace, 0.0, dt))]
    tau, steps = 0.0, 0
    while tau < tau_end - 1e-12:
        h = min(dt, tau_end - tau)
        try:
            candidate = rk4_step(alpha, h, order)
            margin = float(np.min(candidate.real_samples()))
        except WeightDomainError:
            candidate, margin = None, -math.inf
        if candidate is None or margin < POSITIVITY_STEP_MARGIN:
            dt /= 2.0
            logger.warning("tau=%.4f: positivity margin %.2e, halving dt to %.3g", tau, margin, dt)
            if dt < MIN_DT:
                raise FlowBreakdown(f"step size collapsed below {MIN_DT:g} at tau={tau:.6f}")
            continue
        drift = normalization_residual(candidate)
        alpha = normalize(candidate)
        tau += h
        steps += 1
        if steps % every == 0 or tau >= tau_end - 1e-12:
            states.append(emit(_monitor(tau, alpha, N, with_trace, drift, dt)))
    return states
