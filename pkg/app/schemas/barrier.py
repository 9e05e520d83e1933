"""Admissible-set fields and barrier parameters."""

from typing import Protocol, runtime_checkable

from pydantic import BaseModel, ConfigDict, FiniteFloat, PositiveFloat


@runtime_checkable
class AdmissibleField(Protocol):
    """A continuously differentiable h0(x, y) whose 0-superlevel set is admissible."""

    def value(self, x: float, y: float) -> float: ...

    def gradient(self, x: float, y: float) -> tuple[float, float]: ...


class CircularObstacle(BaseModel):
    """h0(x, y) = scale * ((x - cx)^2 + (y - cy)^2 - radius^2).

    Any safety margin around the physical obstacle is folded into `radius`.
    """

    model_config = ConfigDict(frozen=True)

    cx: FiniteFloat
    cy: FiniteFloat
    radius: PositiveFloat
    scale: PositiveFloat = 1.0

    def value(self, x: float, y: float) -> float:
        dx = x - self.cx
        dy = y - self.cy
        return self.scale * (dx * dx + dy * dy - self.radius * self.radius)

    def gradient(self, x: float, y: float) -> tuple[float, float]:
        return 2.0 * self.scale * (x - self.cx), 2.0 * self.scale * (y - self.cy)

    def distance(self, x: float, y: float) -> float:
        """Euclidean distance from (x, y) to the obstacle center."""
        return float(((x - self.cx) ** 2 + (y - self.cy) ** 2) ** 0.5)


class BarrierParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    l_v: PositiveFloat
    l_omega: PositiveFloat
    # alpha_h(s) = alpha_h_slope * s
    alpha_h_slope: PositiveFloat
