from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, PositiveFloat

from app.config import settings
from app.models.enums import ControllerKind

NonEmptyPath = Annotated[str, Field(min_length=1)]


class SimulateCommand(BaseModel):
    task: Literal["simulate"] = "simulate"
    scenario_path: NonEmptyPath
    controller: ControllerKind = ControllerKind.CLF_CBF_QP
    # Default to <outputs_dir>/<scenario>_<controller>.csv / .svg
    out_csv: NonEmptyPath | None = None
    out_svg: NonEmptyPath | None = None
    dt: PositiveFloat | None = None
    t_max: PositiveFloat | None = None


class CompareCommand(BaseModel):
    task: Literal["compare"] = "compare"
    scenario_path: NonEmptyPath
    # One CSV per controller: <prefix>_<controller>.csv
    out_csv_prefix: NonEmptyPath | None = None
    out_svg: NonEmptyPath | None = None
    dt: PositiveFloat | None = None
    t_max: PositiveFloat | None = None


class VerifyCommand(BaseModel):
    task: Literal["verify"] = "verify"
    suite: Literal["clf", "qp", "all"] = "all"
    samples: int = Field(default_factory=lambda: settings.verify_samples, ge=1)
    seed: int = Field(default_factory=lambda: settings.verify_seed)
    # Gains for the clf suite come from this scenario
    scenario_path: NonEmptyPath = "paper_sim"


Command = Annotated[
    Union[SimulateCommand, CompareCommand, VerifyCommand], Field(discriminator="task")
]
