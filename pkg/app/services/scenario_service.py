"""Scenario files: TOML in, validated Scenario out, and back."""

import logging

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.config import settings
from app.core.errors import ScenarioParseError, ScenarioValidationError
from app.core.rendering import templates
from app.schemas.scenario import Scenario, ScenarioFile

logger = logging.getLogger(__name__)


def resolve_scenario_path(ref: str | Path) -> Path:
    """A path as given, or a bare name such as `paper_sim` looked up in scenarios_dir."""
    path = Path(ref)
    if path.exists() or path.suffix or len(path.parts) > 1:
        return path
    return Path(settings.scenarios_dir) / f"{path.name}.toml"


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "scenario"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def load_scenario(ref: str | Path, overrides: dict[str, Any] | None = None) -> Scenario:
    """Parse, apply defaults and overrides to [sim], and validate every invariant."""
    path = resolve_scenario_path(ref)
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ScenarioParseError(str(path), "no such scenario file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(str(path), f"invalid TOML: {exc}") from exc

    if overrides:
        sim = dict(data.get("sim", {}))
        given = {k: v for k, v in overrides.items() if v is not None}
        if "dt" in given and "control_dt" not in given:
            # Re-derived from the new dt
            sim.pop("control_dt", None)
        sim.update(given)
        data["sim"] = sim

    try:
        scenario = ScenarioFile.model_validate(data).to_scenario(path.stem)
    except ValidationError as exc:
        raise ScenarioValidationError(str(path), _describe(exc)) from exc

    logger.info(
        f"Loaded scenario {scenario.name} from {path}: {len(scenario.obstacles)} obstacle(s), "
        f"dt={scenario.dt} control_dt={scenario.control_dt} t_max={scenario.t_max}"
    )
    return scenario


def dump_scenario(scenario: Scenario) -> str:
    return templates.get_template("scenario.toml.j2").render(**dict(scenario))


def write_scenario(scenario: Scenario, path: str | Path) -> None:
    path = Path(path)
    path.write_text(dump_scenario(scenario), encoding="utf-8")
    logger.info(f"Wrote scenario {scenario.name} to {path}")
