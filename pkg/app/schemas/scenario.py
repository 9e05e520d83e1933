"""Scenario: every constant of one simulation run, and the sections of a scenario file."""

import math

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

from app.config import settings
from app.schemas.barrier import BarrierParams, CircularObstacle
from app.schemas.controller import Gains
from app.schemas.qp import QpParams
from app.schemas.vehicle import CartesianState, VehicleParams


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "scenario"
    vehicle: VehicleParams
    gains: Gains
    barrier: BarrierParams
    obstacles: list[CircularObstacle] = Field(min_length=1)
    qp: QpParams
    init: CartesianState
    dt: PositiveFloat = Field(default_factory=lambda: settings.sim_dt)
    control_dt: PositiveFloat = Field(default_factory=lambda: settings.sim_control_dt)
    t_max: PositiveFloat = Field(default_factory=lambda: settings.sim_t_max)
    rho_stop: PositiveFloat = Field(default_factory=lambda: settings.sim_rho_stop)
    seed: int = 0

    @property
    def steps_per_control(self) -> int:
        return round(self.control_dt / self.dt)

    @model_validator(mode="after")
    def _check_invariants(self) -> "Scenario":
        if self.control_dt < self.dt:
            raise ValueError(f"control_dt ({self.control_dt}) must be >= dt ({self.dt})")
        ratio = self.control_dt / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError(
                f"control_dt ({self.control_dt}) must be an integer multiple of dt ({self.dt})"
            )
        if self.rho_stop < settings.rho_min:
            raise ValueError(f"rho_stop ({self.rho_stop}) must be >= rho_min ({settings.rho_min})")
        if math.hypot(self.init.x, self.init.y) < settings.rho_min:
            raise ValueError("init must not start at the origin (rho < rho_min)")
        for i, ob in enumerate(self.obstacles):
            h = ob.value(self.init.x, self.init.y) - (
                self.barrier.l_v * self.init.v**2 + self.barrier.l_omega * self.init.omega**2
            )
            if h < 0.0:
                raise ValueError(f"init violates h >= 0 for obstacle {i} (h={h:.6g})")
        return self


# --- scenario file sections ---


class QpSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m_weight: float = 1.0
    # Derived from gamma * m / (m + 1) = 1 when omitted
    gamma: float | None = None

    def to_params(self) -> QpParams:
        if self.gamma is None:
            return QpParams.stability(self.m_weight)
        return QpParams(gamma=self.gamma, m_weight=self.m_weight)


class SimSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dt: float | None = None
    control_dt: float | None = None
    t_max: float | None = None
    rho_stop: float | None = None
    seed: int = 0


class ScenarioFile(BaseModel):
    """Raw sections as they appear in a scenario TOML file."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    vehicle: VehicleParams
    gains: Gains
    barrier: BarrierParams
    obstacles: list[CircularObstacle] = Field(alias="obstacle", min_length=1)
    qp: QpSection = Field(default_factory=QpSection)
    sim: SimSection = Field(default_factory=SimSection)
    init: CartesianState

    def to_scenario(self, name: str) -> Scenario:
        sim = {k: v for k, v in self.sim.model_dump().items() if v is not None}
        if sim.get("dt", 0.0) > 0.0 and "control_dt" not in sim:
            # Smallest multiple of dt not shorter than the default control period
            dt = sim["dt"]
            sim["control_dt"] = dt * max(1, math.ceil(settings.sim_control_dt / dt - 1e-9))
        return Scenario(
            name=name,
            vehicle=self.vehicle,
            gains=self.gains,
            barrier=self.barrier,
            obstacles=self.obstacles,
            qp=self.qp.to_params(),
            init=self.init,
            **sim,
        )
