from __future__ import annotations

import numpy as np
import pytest

from app.numerics.circle_fourier import FourierFunction, make_alpha_tau, normalization_residual
from app.numerics.flow import (
    defect_trace,
    flow_integrate,
    flow_rhs,
    rk4_step,
    snd_der_trace,
    trace_identity_check,
)
from app.numerics.operators import SpectralFunction, build_discretization


def test_disk_is_a_fixed_point(disk) -> None:
    rhs = flow_rhs(disk, 32)
    assert np.all(rhs.coeffs == 0)


def test_flow_conserves_mean_of_inverse() -> None:
    a = make_alpha_tau(1, 0.2)
    stepped = rk4_step(a, 0.01, 96)
    assert stepped.is_real()
    assert normalization_residual(stepped) < 1e-8


def test_short_flow_moves_towards_disk() -> None:
    states = flow_integrate(make_alpha_tau(1, 0.2), 0.1, dt=0.01, N=64, with_trace=False)
    assert states[0].tau == 0.0
    assert states[-1].tau == pytest.approx(0.1)
    assert states[-1].sup_distance_to_one < states[0].sup_distance_to_one
    assert all(st.snd_der_trace is None for st in states)


def test_flow_rejects_bad_arguments(alpha_r1) -> None:
    with pytest.raises(ValueError):
        flow_integrate(alpha_r1, -1.0)
    with pytest.raises(ValueError):
        flow_integrate(alpha_r1, 1.0, dt=0.0)


def test_snd_der_trace_vanishes_on_disk(disk) -> None:
    assert abs(snd_der_trace(disk, 64)) < 1e-10


def test_snd_der_trace_is_positive_off_the_disk() -> None:
    a = make_alpha_tau(2, 0.15)
    disc = build_discretization(a, 128)
    assert snd_der_trace(a, 128, discretization=disc) > 0.0

    trace = defect_trace(disc, SpectralFunction.power_log(-1.0, 1))
    assert trace.summands[0] == pytest.approx(0.0, abs=1e-9)
    assert np.all(trace.summands >= -1e-9)
    assert trace.value == pytest.approx(float(np.sum(trace.summands)))


@pytest.mark.parametrize("s, m", [(-2.0, 0), (2.0, 0), (0.0, 2)])
def test_flow_derivative_matches_trace_formula(s: float, m: int) -> None:
    report = trace_identity_check(make_alpha_tau(1, 0.1), s, 128, m=m)
    assert report.quantity == f"flow_derivative_m{m}"
    assert report.relative_error < 1e-3


def test_flow_from_disk_is_stationary(disk) -> None:
    states = flow_integrate(disk, 0.05, dt=0.01, N=32, monitor_every=1)
    assert len(states) == 6
    for st in states:
        assert st.sup_distance_to_one < 1e-14
        assert st.zeta2_at_0 == 0.0
        assert abs(st.snd_der_trace) < 1e-10


def test_flow_suite_reaches_disk() -> None:
    records = []
    states = flow_integrate(make_alpha_tau(1, 0.2), 10.0, dt=0.01, N=128, on_state=records.append)
    assert records == states
    assert states[-1].tau == pytest.approx(10.0)

    zeta2 = np.array([st.zeta2_at_0 for st in states])
    assert zeta2[0] > 0.0
    assert np.all(np.diff(zeta2) <= 1e-7)
    assert abs(zeta2[-1]) < 1e-6

    assert all(st.snd_der_trace >= -1e-9 for st in states)
    assert max(st.normalization_residual for st in states) < 1e-12
    assert states[-1].sup_distance_to_one < 1e-4

    record = states[1].as_log_record()
    assert list(record) == ["tau", "residual", "zeta2_at_0", "sup_dist", "snd_der_trace"]


def test_flow_states_report_normalization_drift() -> None:
    states = flow_integrate(make_alpha_tau(1, 0.1), 0.02, dt=0.01, N=32, monitor_every=1, with_trace=False)
    assert states[0].normalization_drift == 0.0
    assert all(0.0 <= st.normalization_drift < 1e-8 for st in states)
    assert all(st.normalization_residual < 1e-12 for st in states)
