from __future__ import annotations

import pytest

from app.data import db_config
from app.numerics.circle_fourier import FourierFunction, MobiusMap, make_alpha_tau, mobius_pullback, normalize


@pytest.fixture(autouse=True)
def audit_db(tmp_path, monkeypatch):
    """Every test audits into its own throwaway database."""
    path = tmp_path / "audit.db"
    monkeypatch.setattr(db_config, "DB_PATH", path)
    return path


@pytest.fixture
def disk() -> FourierFunction:
    return FourierFunction.constant(1.0)


@pytest.fixture
def alpha_r1() -> FourierFunction:
    return make_alpha_tau(1, 0.1)


def perturbed_weights() -> list[FourierFunction]:
    """Non-disk test weights whose spectra resolve the scan range at N = 256."""
    return [
        make_alpha_tau(1, 0.1),
        make_alpha_tau(1, 0.2),
        make_alpha_tau(2, 0.15),
        normalize(FourierFunction.from_modes({0: 1.0, 1: 0.15, -1: 0.15})),
        normalize(mobius_pullback(make_alpha_tau(1, 0.1), MobiusMap(0.3))),
    ]
