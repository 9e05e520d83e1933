"""Certificate and controller types: gains, velocity-error coordinates, Lyapunov data."""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, PositiveFloat, model_validator


class Gains(BaseModel):
    """Tunable constants of the global CLF and the nominal controller.

    `lam` is read from and written to scenario files under the key `lambda`.
    When `epsilon` is omitted it defaults to mu / 2.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(alias="lambda", ge=1.0, allow_inf_nan=False)
    k_rho: PositiveFloat
    k_alpha: PositiveFloat
    k_z: PositiveFloat
    k_omega: PositiveFloat
    mu: PositiveFloat = 0.05
    epsilon: PositiveFloat

    @model_validator(mode="before")
    @classmethod
    def _default_epsilon(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("epsilon") is None:
            data = dict(data)
            data["epsilon"] = data.get("mu", 0.05) / 2
        return data


class ErrorCoords(BaseModel):
    model_config = ConfigDict(frozen=True)

    # z = (v - v*) / rho
    z: FiniteFloat
    omega_err: FiniteFloat


class SymMatrix2(BaseModel):
    model_config = ConfigDict(frozen=True)

    p11: FiniteFloat
    p12: FiniteFloat
    p22: FiniteFloat

    @property
    def det(self) -> float:
        return self.p11 * self.p22 - self.p12 * self.p12

    @property
    def is_positive_definite(self) -> bool:
        return self.p11 > 0 and self.det > 0

    def as_array(self) -> np.ndarray:
        return np.array([[self.p11, self.p12], [self.p12, self.p22]])


class LyapunovBreakdown(BaseModel):
    model_config = ConfigDict(frozen=True)

    w1: float
    w2: float
    w: float
    w_sharp: float
    u_quad: float
    v_total: float
    # Gradient of V over (rho, alpha, psi, z, omega_err)
    grad: tuple[float, float, float, float, float]
