from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.numerics.circle_fourier import FourierFunction


class FourierFunctionModel(BaseModel):
    """Wire form of a FourierFunction; coefficient order is k = -M..M."""
    grid_order: int = Field(..., ge=0, description="M, the highest stored mode")
    coeffs: list[tuple[float, float]] = Field(..., description="[re, im] pairs for k = -M..M")

    @model_validator(mode="after")
    def _check_length(self) -> "FourierFunctionModel":
        expected = 2 * self.grid_order + 1
        if len(self.coeffs) != expected:
            raise ValueError(f"grid_order {self.grid_order} needs {expected} coefficients, got {len(self.coeffs)}")
        return self

    def to_function(self) -> FourierFunction:
        pairs = np.asarray(self.coeffs, dtype=float).reshape(-1, 2)
        return FourierFunction(pairs[:, 0] + 1j * pairs[:, 1], self.grid_order)

    @classmethod
    def from_function(cls, f: FourierFunction) -> "FourierFunctionModel":
        return cls(grid_order=f.grid_order, coeffs=[(float(c.real), float(c.imag)) for c in f.coeffs])
