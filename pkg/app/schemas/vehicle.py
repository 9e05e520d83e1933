"""Vehicle model types: physical parameters, Cartesian and polar states, inputs."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, NonNegativeFloat, PositiveFloat


class VehicleParams(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    mass: PositiveFloat
    inertia: PositiveFloat
    wheel_radius: PositiveFloat
    # R as it appears (times two) in the torque matrix; `axle` in scenario files
    axle_param: PositiveFloat = Field(alias="axle")


class CartesianState(BaseModel):
    """Ground-truth state integrated by the simulator. theta is not wrapped."""

    model_config = ConfigDict(frozen=True)

    x: FiniteFloat
    y: FiniteFloat
    theta: FiniteFloat
    v: FiniteFloat = 0.0
    omega: FiniteFloat = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.v, self.omega])

    @classmethod
    def from_array(cls, values) -> "CartesianState":
        x, y, theta, v, omega = (float(c) for c in values)
        return cls(x=x, y=y, theta=theta, v=v, omega=omega)


class PolarPose(BaseModel):
    model_config = ConfigDict(frozen=True)

    # rho = 0 is representable so the certificates can be evaluated at the
    # origin; operations that divide by rho reject it with DegeneratePose
    rho: NonNegativeFloat
    alpha: FiniteFloat
    psi: FiniteFloat


class ControlInput(BaseModel):
    model_config = ConfigDict(frozen=True)

    u_v: FiniteFloat = 0.0
    u_omega: FiniteFloat = 0.0


class WheelTorques(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau_l: FiniteFloat
    tau_r: FiniteFloat
