"""
app/services/weight_service.py

Purpose
-------
Turns the weight mini-language used by the command line and POST /run into a
normalized FourierFunction.

Grammar
-------
See WEIGHT_GRAMMAR below (also shown by `python -m app --help`).

Every parsed weight is normalized; errors in the spec text or the file are
ConfigError, errors of the weight itself (positivity, |w| >= 1) stay
WeightDomainError.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from pydantic import ValidationError

from app.errors import ConfigError
from app.numerics.circle_fourier import (
    FourierFunction,
    MobiusMap,
    make_alpha_tau,
    mobius_pullback,
    normalize,
)
from app.schemas.fourier_schema import FourierFunctionModel

logger = logging.getLogger(__name__)

WEIGHT_GRAMMAR = """\
    constant                  the disk weight a = 1
    constant:<c>              a = c (normalized to 1)
    alpha-tau:<r>,<tau>       (1 - 2 tau cos((2r+1) theta))^-1
    file:<path>               JSON {"grid_order": M, "coeffs": [[re, im], ...]}
    fourier-file:<path>       same as file:
    mobius:<w>:<base>         conformal pullback of <base> by Psi_w (w a Python complex literal, e.g. 0.4j)
    mobius-anti:<w>:<base>    anticonformal pullback
"""


def _number(text: str, what: str, kind=float):
    try:
        return kind(text.strip())
    except ValueError as ex:
        raise ConfigError(f"bad {what} {text!r} in weight spec") from ex


def load_weight_file(path: str | Path) -> FourierFunction:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"weight file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        model = FourierFunctionModel.model_validate(payload)
    except (json.JSONDecodeError, ValidationError) as ex:
        raise ConfigError(f"malformed weight file {path}: {ex}") from ex
    f = model.to_function()
    if not f.is_real():
        raise ConfigError(f"weight file {path} is not real-valued (coefficients are not Hermitian)")
    return f


def parse_weight_spec(spec: str) -> FourierFunction:
    """Parse and normalize a weight spec."""
    spec = spec.strip()
    head, _, rest = spec.partition(":")

    if head == "constant":
        value = _number(rest, "constant", float) if rest else 1.0
        weight = FourierFunction.constant(value)
    elif head == "alpha-tau":
        parts = rest.split(",")
        if len(parts) != 2:
            raise ConfigError(f"alpha-tau needs '<r>,<tau>', got {rest!r}")
        weight = make_alpha_tau(_number(parts[0], "r", int), _number(parts[1], "tau", float))
    elif head in ("file", "fourier-file"):
        if not rest:
            raise ConfigError("file: needs a path")
        weight = load_weight_file(rest)
    elif head in ("mobius", "mobius-anti"):
        w_text, sep, base = rest.partition(":")
        if not sep or not base:
            raise ConfigError(f"{head} needs '<w>:<base spec>', got {rest!r}")
        orientation = "anticonformal" if head == "mobius-anti" else "conformal"
        base_weight = parse_weight_spec(base)
        weight = mobius_pullback(base_weight, MobiusMap(_number(w_text, "w", complex), orientation))
    else:
        raise ConfigError(f"unknown weight spec {spec!r}; expected one of:\n{WEIGHT_GRAMMAR}")

    logger.debug("weight %s: grid order %d", spec, weight.grid_order)
    return normalize(weight)
