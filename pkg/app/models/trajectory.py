"""Per-step simulation records."""

import math

from pydantic import BaseModel, ConfigDict, Field

from app.models.enums import ControllerKind, QpRegion
from app.schemas.barrier import CircularObstacle


class TrajectoryRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    x: float
    y: float
    theta: float
    v: float
    omega: float
    rho: float
    alpha: float
    psi: float
    z: float
    omega_err: float
    V: float
    W: float
    h: float
    h0: float
    u_v: float
    u_omega: float
    tau_l: float
    tau_r: float
    # None for the nominal controller, which solves no QP
    region: QpRegion | None
    f1_residual: float
    f2_residual: float


FIELDS: tuple[str, ...] = tuple(TrajectoryRow.model_fields)
NUMERIC_FIELDS: tuple[str, ...] = tuple(f for f in FIELDS if f != "region")


class TrajectoryLog(BaseModel):
    controller: ControllerKind | None = None
    rows: list[TrajectoryRow] = Field(default_factory=list)
    converged: bool = False

    def append(self, row: TrajectoryRow) -> None:
        if self.rows and not row.t > self.rows[-1].t:
            raise ValueError(f"Non-increasing time {row.t!r} after {self.rows[-1].t!r}")
        bad = [f for f in NUMERIC_FIELDS if not math.isfinite(getattr(row, f))]
        if bad:
            raise ValueError(f"Non-finite values at t={row.t!r}: {', '.join(bad)}")
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def min_h(self) -> float:
        return min((r.h for r in self.rows), default=math.inf)

    def final_distance(self) -> float:
        if not self.rows:
            return math.nan
        last = self.rows[-1]
        return math.hypot(last.x, last.y)

    def min_obstacle_distance(self, obstacles: list[CircularObstacle]) -> float:
        return min(
            (ob.distance(r.x, r.y) for r in self.rows for ob in obstacles),
            default=math.inf,
        )

    def region_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.rows:
            key = r.region.value if r.region is not None else "none"
            counts[key] = counts.get(key, 0) + 1
        return counts
