"""
Request and report models shared by the command line and the HTTP surface.

RunConfig carries one batch command; RunReport is the JSON document every
command produces ({version, config_echo, results, diagnostics}).
"""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, field_validator

Command = Literal["spectrum", "zeta", "scan", "variation", "counterexample", "flow", "s0"]

MAX_DIMENSION = 4097


def parse_grid(text: str) -> list[float]:
    """'a:b:step' -> [a, a + step, ..., b] (inclusive, b reached within step/1e6)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"grid needs step > 0 and stop >= start, got {text!r}")
    count = int((stop - start) / step + 1e-6) + 1
    return [round(start + i * step, 12) for i in range(count)]


class RunConfig(BaseModel):
    command: Command
    weight: str = Field("constant", description="weight spec, see `python -m app --help`")
    trunc: Optional[int] = Field(None, ge=16, description="truncation order N; 2N+1 <= 4097")
    out_format: Literal["csv", "json"] = "json"
    out_path: Optional[str] = Field(None, description="report file; stdout when omitted")

    # zeta / scan
    s: float = 1.0
    m: int = Field(0, ge=0, le=2, description="s-derivative order")
    grid: str = Field("-3:3:0.25", description="s grid start:stop:step for scan")
    trace_form: bool = Field(False, description="zeta: also evaluate through the phi_n trace")

    # variation / counterexample
    r: int = Field(1, ge=1)
    z: list[float] = Field(default_factory=lambda: [-1.0, 0.5, 2.0])
    tau: float = 0.01
    tau_step: float = Field(1e-3, gt=0)
    log_diag_m: Optional[int] = Field(None, ge=1, description="also check the log-diagonal expansion at this m")
    r_max: int = Field(40, ge=1)

    # flow
    tau_end: float = Field(10.0, ge=0)
    dt: float = Field(0.01, gt=0)
    monitor_every: Optional[int] = Field(None, ge=1)
    trajectory_path: Optional[str] = Field(None, description="JSON lines trajectory log")

    dump_matrix: Optional[str] = Field(None, description="write Lambda_a as raw little-endian float64")
    max_workers: Optional[int] = Field(None, ge=1)

    @field_validator("trunc")
    @classmethod
    def _dimension_limit(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and 2 * v + 1 > MAX_DIMENSION:
            raise ValueError(f"2N+1 must be <= {MAX_DIMENSION}, got N={v}")
        return v

    @field_validator("grid")
    @classmethod
    def _grid_parses(cls, v: str) -> str:
        parse_grid(v)
        return v

    @property
    def s_grid(self) -> list[float]:
        return parse_grid(self.grid)


class RunReport(BaseModel):
    version: str
    config_echo: dict[str, Any]
    results: list[dict[str, Any]]
    diagnostics: dict[str, Any] = Field(default_factory=dict)


class ErrorDetail(BaseModel):
    """Body of a rejected HTTP run."""
    error: str
    exit_code: int
    message: str
