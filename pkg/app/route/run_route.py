"""
app/route/run_route.py

APIRouter exposing the batch commands over HTTP.

Endpoints:
- GET  /health   -> health check, DB init, version
- GET  /diag     -> effective configuration (defaults read from the environment)
- POST /run      -> RunConfig in, RunReport (JSON) out

Validation failures answer 400, numerical rejections 422; the body carries the
same exit code the command line would have returned.
"""

from __future__ import annotations

import logging
import time

from fastapi import APIRouter, HTTPException

from app import __version__
from app.data.db_config import DB_PATH, init_db
from app.errors import exit_code_for
from app.numerics.parallel import DEFAULT_MAX_WORKERS
from app.schemas.run_schema import ErrorDetail, RunConfig, RunReport
from app.services.run_service import (
    AUDIT_ENABLED,
    DEFAULT_TRUNC,
    audit,
    report_digest,
    run_command,
)

router = APIRouter(tags=["runs"])

STATUS_FOR_EXIT = {2: 400, 3: 422}


@router.get("/diag")
def diag():
    return {
        "default_trunc": DEFAULT_TRUNC,
        "max_workers": DEFAULT_MAX_WORKERS,
        "audit_enabled": AUDIT_ENABLED,
        "db_path": str(DB_PATH),
    }


@router.get("/health")
def health():
    """
    Basic health check. Ensures DB is initialized.
    """
    init_db()
    return {"status": "ok", "version": __version__}


@router.post("/run", response_model=RunReport)
def run(config: RunConfig):
    """
    Runs one command synchronously and returns its JSON report.
    out_format and out_path are ignored here; the report is the response body.
    """
    started = time.perf_counter()
    try:
        report = run_command(config)
    except Exception as ex:
        code = exit_code_for(ex)
        audit(config, code, 1000.0 * (time.perf_counter() - started), None, f"{type(ex).__name__}: {ex}")
        if code == 1:
            logging.exception("run %s failed", config.command)
            raise HTTPException(status_code=500, detail=f"{type(ex).__name__}: {ex}") from ex
        detail = ErrorDetail(error=type(ex).__name__, exit_code=code, message=str(ex))
        raise HTTPException(status_code=STATUS_FOR_EXIT[code], detail=detail.model_dump()) from ex

    audit(config, 0, 1000.0 * (time.perf_counter() - started), report_digest(report))
    return report
