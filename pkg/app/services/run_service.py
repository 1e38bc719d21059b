"""
app/services/run_service.py

Purpose
-------
Everything between a parsed RunConfig and a written report, so the CLI and
the HTTP route only do argument / request handling.

This module provides:
- run_command(config)          -> RunReport for one command (raises on failure)
- render_report(report, fmt)   -> CSV or JSON text with fixed headers / key order
- write_report(report, config) -> report file (or stdout)
- execute(config)              -> exit code; logs, writes and audits the run

Dependencies
------------
- Numerics:        app/numerics/*
- Weight parsing:  app/services/weight_service.py (parse_weight_spec)
- Models:          app/schemas/run_schema.py (RunConfig, RunReport)
- Audit:           app/data/db_config.py (init_db, record_run, log_message)
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
from dataclasses import fields
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
from dotenv import load_dotenv

from app import __version__
from app.data.db_config import init_db, log_message, record_run
from app.errors import SearchExhausted, WeightDomainError, exit_code_for
from app.numerics.flow import FlowState, flow_integrate
from app.numerics.operators import build_discretization, dump_matrix
from app.numerics.spectrum import steklov_spectrum
from app.numerics.variation import (
    CounterexampleReport,
    DeformationFamily,
    VariationReport,
    counterexample_search,
    first_variation_check,
    log_diag_check,
    second_variation_check,
    second_variation_zeta,
    second_variation_zeta_prime,
)
from app.numerics.zeta import (
    convexity_scan,
    estimate_s_a,
    s0_function,
    s0_root,
    zeta_diff_deriv,
    zeta_diff_trace,
)
from app.schemas.run_schema import RunConfig, RunReport
from app.services.weight_service import parse_weight_spec

load_dotenv()

logger = logging.getLogger(__name__)

# -------------------------------------------------------------------
# Paths and configuration
# -------------------------------------------------------------------
DEFAULT_TRUNC = int(os.getenv("STEKLOV_DEFAULT_TRUNC", "128"))
AUDIT_ENABLED = os.getenv("STEKLOV_AUDIT", "1") != "0"

Z_STEP = 1e-4          # z-step of the closed-form consistency difference

CSV_COLUMNS: dict[str, list[str]] = {
    "spectrum": ["k", "lambda_k", "disk_k", "diff"],
    "zeta": ["s", "deriv_order", "value", "truncation_index", "tail"],
    "scan": ["s", "diff", "diff1", "diff2", "tail"],
    "variation": ["quantity", "parameter", "closed_form", "finite_difference", "tau_step", "relative_error"],
    "counterexample": [f.name for f in fields(CounterexampleReport)],
    "flow": ["tau", "residual", "zeta2_at_0", "sup_dist", "snd_der_trace"],
    "s0": ["s0", "residual"],
}


def _plain(value: Any) -> Any:
    """numpy scalars -> Python scalars so the JSON encoder sees plain types."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def resolve_trunc(config: RunConfig) -> int:
    return config.trunc if config.trunc is not None else DEFAULT_TRUNC


# -------------------------------------------------------------------
# Commands
# -------------------------------------------------------------------
def _spectrum(config: RunConfig, N: int) -> tuple[list[dict], dict]:
    a = parse_weight_spec(config.weight)
    disc = build_discretization(a, N)
    if config.dump_matrix:
        dump_matrix(disc.lambda_a, config.dump_matrix)
        logger.info("Lambda_a written to %s", config.dump_matrix)
    spectrum = steklov_spectrum(a, N, discretization=disc)
    diagnostics = {
        "trusted_count": spectrum.trusted_count,
        "truncation_order": spectrum.truncation_order,
        "tail_residual": spectrum.tail_residual,
        "weinstock_gap": float(1.0 - spectrum.eigenvalues[1]),
        "normalization_residual": disc.normalization_residual,
        "sqrt_bandwidth": disc.sqrt_bandwidth,
    }
    return spectrum.rows(), diagnostics


def _zeta(config: RunConfig, N: int) -> tuple[list[dict], dict]:
    a = parse_weight_spec(config.weight)
    evaluation = zeta_diff_deriv(a, config.s, config.m, N)
    diagnostics: dict[str, Any] = {}
    if config.trace_form:
        trace = zeta_diff_trace(a, config.s, config.m, N)
        diagnostics["trace_value"] = trace.value
        diagnostics["trace_difference"] = abs(trace.value - evaluation.value)
    return [evaluation.as_row()], diagnostics


def _scan(config: RunConfig, N: int) -> tuple[list[dict], dict]:
    a = parse_weight_spec(config.weight)
    spectrum = steklov_spectrum(a, N)
    rows = convexity_scan(a, config.s_grid, N, spectrum=spectrum, max_workers=config.max_workers)
    concave = [row.s for row in rows if row.diff2 < 0.0]
    diagnostics: dict[str, Any] = {
        "min_diff": min(row.diff for row in rows),
        "concave_points": concave,
        "trusted_count": spectrum.trusted_count,
    }
    try:
        diagnostics["s_a_estimate"] = estimate_s_a(a, N, spectrum=spectrum)
    except (WeightDomainError, SearchExhausted) as ex:
        logger.info("s_a not estimated: %s", ex)
        diagnostics["s_a_estimate"] = None
    return [row.as_row() for row in rows], diagnostics


def _z_consistency(r: int, s: float) -> VariationReport:
    beta = DeformationFamily.single_mode(r).beta
    fd = (second_variation_zeta(beta, s + Z_STEP) - second_variation_zeta(beta, s - Z_STEP)) / (2 * Z_STEP)
    return VariationReport.compare(second_variation_zeta_prime(r, s), fd, Z_STEP, "second_variation_zeta_prime", s)


def _variation(config: RunConfig, N: int) -> tuple[list[dict], dict]:
    family = DeformationFamily.single_mode(config.r)
    freq = 2 * config.r + 1
    if N < 16 * freq:
        logger.warning("N=%d is below 16x the perturbation frequency %d", N, freq)
    reports = []
    for z in config.z:
        reports.append(second_variation_check(family, z, N, tau_step=config.tau_step))
        reports.append(first_variation_check(family, z, N))
    reports.append(_z_consistency(config.r, config.s))
    if config.log_diag_m is not None:
        check = log_diag_check(family, config.log_diag_m, config.tau, N)
        reports.append(
            VariationReport.compare(check.predicted_shift, check.numeric_shift, config.tau, "log_diag_shift", check.m)
        )
    worst = max((rep.relative_error for rep in reports if rep.quantity == "second_variation_zeta"), default=0.0)
    return [rep.as_row() for rep in reports], {"worst_second_variation_error": worst, "frequency": freq}


def _counterexample(config: RunConfig, N: int) -> tuple[list[dict], dict]:
    report = counterexample_search(config.s, config.r_max, config.tau, N, max_workers=config.max_workers)
    non_convex = report.spectral_diff1 < 0.0 and abs(report.spectral_diff1_at_zero) < 1e-6
    return [report.as_row()], {"non_convex": non_convex}


def _flow(config: RunConfig, N: int) -> tuple[list[dict], dict]:
    alpha0 = parse_weight_spec(config.weight)
    sink = open(config.trajectory_path, "w", encoding="utf-8") if config.trajectory_path else None

    def on_state(state: FlowState) -> None:
        if sink is not None:
            sink.write(json.dumps(_plain(state.as_log_record()), sort_keys=True) + "\n")

    try:
        states = flow_integrate(
            alpha0,
            config.tau_end,
            dt=config.dt,
            N=N,
            monitor_every=config.monitor_every,
            on_state=on_state,
        )
    finally:
        if sink is not None:
            sink.close()

    zeta2 = np.array([st.zeta2_at_0 for st in states])
    traces = [st.snd_der_trace for st in states if st.snd_der_trace is not None]
    diagnostics = {
        "monitored_states": len(states),
        "final_sup_distance": states[-1].sup_distance_to_one,
        "max_zeta2_increase": float(np.max(np.diff(zeta2), initial=0.0)),
        "min_snd_der_trace": min(traces) if traces else None,
        "max_normalization_residual": max(st.normalization_residual for st in states),
        "max_normalization_drift": max(st.normalization_drift for st in states),
        "final_dt": states[-1].dt,
    }
    return [st.as_log_record() for st in states], diagnostics


def _s0(config: RunConfig, N: int) -> tuple[list[dict], dict]:
    root = s0_root()
    return [{"s0": root, "residual": abs(s0_function(root))}], {}


COMMANDS: dict[str, Callable[[RunConfig, int], tuple[list[dict], dict]]] = {
    "spectrum": _spectrum,
    "zeta": _zeta,
    "scan": _scan,
    "variation": _variation,
    "counterexample": _counterexample,
    "flow": _flow,
    "s0": _s0,
}


def run_command(config: RunConfig) -> RunReport:
    N = resolve_trunc(config)
    logger.info("running %s with weight %s at N=%d", config.command, config.weight, N)
    rows, diagnostics = COMMANDS[config.command](config, N)
    echo = config.model_dump(mode="json")
    echo["trunc"] = N
    return RunReport(
        version=__version__,
        config_echo=echo,
        results=_plain(rows),
        diagnostics=_plain(diagnostics),
    )


# -------------------------------------------------------------------
# Rendering
# -------------------------------------------------------------------
def _csv_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def render_report(report: RunReport, out_format: str, command: Optional[str] = None) -> str:
    if out_format == "json":
        return json.dumps(report.model_dump(), sort_keys=True, indent=2) + "\n"
    command = command or report.config_echo["command"]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS[command], lineterminator="\n")
    writer.writeheader()
    for row in report.results:
        writer.writerow({key: _csv_cell(row.get(key)) for key in writer.fieldnames})
    return buffer.getvalue()


def report_digest(report: RunReport) -> str:
    return hashlib.sha256(render_report(report, "json").encode("utf-8")).hexdigest()


def write_report(report: RunReport, config: RunConfig) -> Optional[Path]:
    text = render_report(report, config.out_format, config.command)
    if config.out_path is None:
        sys.stdout.write(text)
        return None
    path = Path(config.out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("report written to %s", path)
    return path


# -------------------------------------------------------------------
# Orchestration
# -------------------------------------------------------------------
def audit(
    config: RunConfig,
    exit_code: int,
    elapsed_ms: float,
    digest: Optional[str],
    error: Optional[str] = None,
) -> None:
    """Best-effort run record; disabled with STEKLOV_AUDIT=0."""
    if not AUDIT_ENABLED:
        return
    try:
        init_db()
    except Exception as ex:
        logger.warning("DB init warning: %s: %s", type(ex).__name__, ex)
        return
    record_run(config.command, json.dumps(config.model_dump(mode="json"), sort_keys=True), exit_code, elapsed_ms, digest)
    if error is not None:
        log_message("ERROR", f"{config.command}: {error}")


def execute(config: RunConfig) -> int:
    """Run, write and audit one command; returns the process exit code."""
    started = time.perf_counter()
    digest, error = None, None
    try:
        report = run_command(config)
        write_report(report, config)
        digest = report_digest(report)
        code = 0
    except Exception as ex:
        code = exit_code_for(ex)
        if code == 1:
            logger.exception("%s failed", config.command)
        else:
            logger.error("%s: %s", type(ex).__name__, ex)
        error = f"{type(ex).__name__}: {ex}"
    elapsed_ms = 1000.0 * (time.perf_counter() - started)
    audit(config, code, elapsed_ms, digest, error)
    return code
