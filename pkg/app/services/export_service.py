"""CSV and SVG output of trajectory logs."""

import csv
import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from app.config import settings
from app.core.rendering import templates
from app.models.enums import ControllerKind, QpRegion
from app.models.trajectory import FIELDS, TrajectoryLog, TrajectoryRow
from app.schemas.scenario import Scenario

logger = logging.getLogger(__name__)

PATH_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
PATH_DASHES = ("none", "8 4", "2 3", "12 3 2 3")
QUANTITY_COLORS = {"rho": "#d62728", "alpha": "#9467bd", "psi": "#17becf"}

WIDTH = 1000
HEIGHT = 580


# --- CSV ---


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, QpRegion):
        return value.value
    # repr is the shortest string that round-trips a float
    return repr(float(value))


def export_csv(log: TrajectoryLog, path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(FIELDS)
            for row in log.rows:
                writer.writerow([_cell(getattr(row, name)) for name in FIELDS])
    except OSError as exc:
        logger.error(f"Cannot write CSV {path}: {exc}")
        raise
    logger.info(f"Wrote {len(log)} rows to {path}")


def read_csv(path: str | Path, controller: ControllerKind | None = None) -> TrajectoryLog:
    """Inverse of export_csv."""
    path = Path(path)
    log = TrajectoryLog(controller=controller)
    with path.open(encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != FIELDS:
            raise ValueError(f"{path}: unexpected CSV header {header!r}")
        for line_no, cells in enumerate(reader, start=2):
            if len(cells) != len(FIELDS):
                raise ValueError(
                    f"{path}:{line_no}: expected {len(FIELDS)} cells, got {len(cells)}"
                )
            values = dict(zip(FIELDS, cells))
            region = values.pop("region")
            row = TrajectoryRow(
                region=QpRegion(region) if region else None,
                **{k: float(v) for k, v in values.items()},
            )
            log.append(row)
    return log


# --- SVG ---


def _decimate(rows: list[TrajectoryRow], limit: int) -> list[TrajectoryRow]:
    """Evenly spaced rows, at most `limit`; the first and last are always kept."""
    if len(rows) <= limit:
        return rows
    idx = np.unique(np.linspace(0, len(rows) - 1, max(limit, 2)).round().astype(int))
    return [rows[i] for i in idx]


def _points(xs: Sequence[float], ys: Sequence[float]) -> str:
    return " ".join(f"{x:.6g},{y:.6g}" for x, y in zip(xs, ys))


def _span(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-12:
        return lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _frame(x: float, y: float, w: float, h: float) -> dict:
    return {"x": x, "y": y, "w": w, "h": h}


def _xy_panel(paths: list[list[TrajectoryRow]], scenario: Scenario) -> dict:
    xs = [0.0, scenario.init.x]
    ys = [0.0, scenario.init.y]
    for rows in paths:
        xs.extend(r.x for r in rows)
        ys.extend(r.y for r in rows)
    for ob in scenario.obstacles:
        xs.extend((ob.cx - ob.radius, ob.cx + ob.radius))
        ys.extend((ob.cy - ob.radius, ob.cy + ob.radius))
    x_min, x_max = _span(min(xs), max(xs))
    y_min, y_max = _span(min(ys), max(ys))
    frame = _frame(40, 40, 440, 420)
    # Uniform scale keeps circles round
    s = min(frame["w"] / (x_max - x_min), frame["h"] / (y_max - y_min))
    return {
        "frame": frame,
        "x_min": x_min,
        "x_max": x_max,
        "y_min": y_min,
        "y_max": y_max,
        "sx": s,
        "sy": s,
        "tx": frame["x"] + (frame["w"] - s * (x_max - x_min)) / 2 - s * x_min,
        "ty": frame["y"] + (frame["h"] - s * (y_max - y_min)) / 2 + s * y_max,
    }


def _time_panel(paths: list[list[TrajectoryRow]]) -> dict:
    ts = [r.t for rows in paths for r in rows] or [0.0]
    vs = [getattr(r, q) for rows in paths for r in rows for q in QUANTITY_COLORS] or [0.0]
    t_min, t_max = min(ts), max(ts)
    if t_max - t_min < 1e-12:
        t_max = t_min + 1.0
    v_min, v_max = _span(min(vs), max(vs))
    frame = _frame(540, 40, 420, 420)
    sx = frame["w"] / (t_max - t_min)
    sy = frame["h"] / (v_max - v_min)
    return {
        "frame": frame,
        "x_min": t_min,
        "x_max": t_max,
        "y_min": v_min,
        "y_max": v_max,
        "sx": sx,
        "sy": sy,
        "tx": frame["x"] - sx * t_min,
        "ty": frame["y"] + sy * v_max,
    }


def render_svg(
    logs: Sequence[tuple[str, TrajectoryLog]],
    scenario: Scenario,
    max_points: int | None = None,
) -> str:
    if not logs:
        raise ValueError("export_svg needs at least one log")
    max_points = max_points or settings.svg_max_points
    decimated = [_decimate(log.rows, max_points) for _, log in logs]

    paths = []
    polar = []
    for i, ((label, _), rows) in enumerate(zip(logs, decimated)):
        color = PATH_COLORS[i % len(PATH_COLORS)]
        dash = PATH_DASHES[i % len(PATH_DASHES)]
        paths.append(
            {
                "label": label,
                "color": color,
                "dash": dash,
                "xy": _points([r.x for r in rows], [r.y for r in rows]),
            }
        )
        ts = [r.t for r in rows]
        for quantity, q_color in QUANTITY_COLORS.items():
            polar.append(
                {
                    "label": label,
                    "quantity": quantity,
                    "color": q_color,
                    "dash": dash,
                    "points": _points(ts, [getattr(r, quantity) for r in rows]),
                }
            )

    xy = _xy_panel(decimated, scenario)
    return templates.get_template("trajectory.svg.j2").render(
        title=f"{scenario.name}: {', '.join(label for label, _ in logs)}",
        width=WIDTH,
        height=HEIGHT,
        xy=xy,
        tp=_time_panel(decimated),
        obstacles=scenario.obstacles,
        paths=paths,
        polar=polar,
        start=scenario.init,
        marker_r=6.0 / xy["sx"],
        legend={"x": 40, "y": 500},
        quantities=[{"name": q, "color": c} for q, c in QUANTITY_COLORS.items()],
    )


def export_svg(
    logs: Sequence[tuple[str, TrajectoryLog]], scenario: Scenario, path: str | Path
) -> None:
    """Write XY paths with obstacles and markers, plus rho/alpha/psi against time."""
    path = Path(path)
    text = render_svg(logs, scenario)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        logger.error(f"Cannot write SVG {path}: {exc}")
        raise
    logger.info(f"Wrote SVG with {len(logs)} paths to {path}")
