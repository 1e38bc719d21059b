from __future__ import annotations

import json

import numpy as np
import pytest

from app.errors import ConfigError, WeightDomainError
from app.numerics.circle_fourier import make_alpha_tau, normalization_residual
from app.schemas.fourier_schema import FourierFunctionModel
from app.schemas.run_schema import RunConfig, parse_grid
from app.services.run_service import render_report, report_digest, run_command
from app.services.weight_service import parse_weight_spec


def test_constant_weights_are_normalized() -> None:
    assert parse_weight_spec("constant").coefficient(0) == 1.0
    assert parse_weight_spec("constant:3.5").coefficient(0) == pytest.approx(1.0)


def test_alpha_tau_spec() -> None:
    a = parse_weight_spec(" alpha-tau:2,0.05 ")
    assert np.max(np.abs(a.coeffs - make_alpha_tau(2, 0.05).coeffs)) < 1e-12


@pytest.mark.parametrize("spec", ["mobius:0.4j:alpha-tau:1,0.1", "mobius-anti:0.2:alpha-tau:1,0.1"])
def test_mobius_specs_nest(spec: str) -> None:
    a = parse_weight_spec(spec)
    assert a.is_real()
    assert normalization_residual(a) < 1e-12


def test_weight_file(tmp_path) -> None:
    path = tmp_path / "weight.json"
    path.write_text(FourierFunctionModel.from_function(make_alpha_tau(1, 0.1)).model_dump_json())
    for head in ("file", "fourier-file"):
        a = parse_weight_spec(f"{head}:{path}")
        assert np.max(np.abs(a.coeffs - make_alpha_tau(1, 0.1).coeffs)) < 1e-12


def test_bad_weight_files(tmp_path) -> None:
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError, match="malformed"):
        parse_weight_spec(f"file:{broken}")

    complex_valued = tmp_path / "complex.json"
    complex_valued.write_text(json.dumps({"grid_order": 1, "coeffs": [[0.0, 0.0], [1.0, 0.0], [0.2, 0.0]]}))
    with pytest.raises(ConfigError, match="not real"):
        parse_weight_spec(f"file:{complex_valued}")

    with pytest.raises(ConfigError, match="not found"):
        parse_weight_spec(f"file:{tmp_path / 'missing.json'}")


@pytest.mark.parametrize(
    "spec, error",
    [
        ("ellipse:2", ConfigError),
        ("alpha-tau:x,0.1", ConfigError),
        ("mobius:0.3", ConfigError),
        ("file:", ConfigError),
        ("alpha-tau:1,0.6", WeightDomainError),
        ("mobius:0.9+0.9j:constant", WeightDomainError),
        ("constant:-1", WeightDomainError),
    ],
)
def test_bad_specs(spec: str, error: type) -> None:
    with pytest.raises(error):
        parse_weight_spec(spec)


def test_parse_grid() -> None:
    assert parse_grid("-3:3:0.25")[0] == -3.0
    assert parse_grid("-3:3:0.25")[-1] == 3.0
    assert len(parse_grid("-3:3:0.25")) == 25
    assert parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    with pytest.raises(ValueError):
        parse_grid("1:0:0.1")
    with pytest.raises(ValueError):
        parse_grid("0:1")


def test_run_config_limits() -> None:
    with pytest.raises(ValueError):
        RunConfig(command="spectrum", trunc=8)
    with pytest.raises(ValueError):
        RunConfig(command="spectrum", trunc=2049)
    assert RunConfig(command="spectrum", trunc=2048).trunc == 2048


def test_csv_rendering_keeps_fixed_headers() -> None:
    report = run_command(RunConfig(command="flow", weight="constant", trunc=16, tau_end=0.0))
    text = render_report(report, "csv")
    lines = text.splitlines()
    assert lines[0] == "tau,residual,zeta2_at_0,sup_dist,snd_der_trace"
    assert len(lines) == 2
    assert report.config_echo["trunc"] == 16
    assert report.diagnostics["max_normalization_drift"] == 0.0


def test_json_rendering_is_stable() -> None:
    config = RunConfig(command="zeta", weight="alpha-tau:1,0.1", trunc=64, s=0.5, m=1)
    first, second = run_command(config), run_command(config)
    assert render_report(first, "json") == render_report(second, "json")
    assert report_digest(first) == report_digest(second)
    assert list(json.loads(render_report(first, "json"))) == ["config_echo", "diagnostics", "results", "version"]
