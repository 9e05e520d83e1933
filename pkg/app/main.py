"""Command-line front end: simulate, compare and verify."""

import argparse
import logging
import math
from pathlib import Path
from typing import Sequence

from pydantic import TypeAdapter, ValidationError

from app.config import settings
from app.core.errors import (
    DegeneratePose,
    DegenerateQp,
    NoFeasibleActiveSet,
    ScenarioParseError,
    ScenarioValidationError,
    UnsafeStart,
)
from app.models.enums import ControllerKind
from app.models.trajectory import TrajectoryLog
from app.schemas.command import Command, CompareCommand, SimulateCommand, VerifyCommand
from app.schemas.scenario import Scenario
from app.services.export_service import export_csv, export_svg
from app.services.scenario_service import load_scenario
from app.services.simulation_service import run
from app.services.verification_service import verify_clf, verify_qp

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1

RUN_ERRORS = (DegenerateQp, DegeneratePose, NoFeasibleActiveSet, UnsafeStart)
SCENARIO_ERRORS = (ScenarioParseError, ScenarioValidationError)

_command_adapter = TypeAdapter(Command)


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safe-parking-qp",
        description="Safety-critical parking of a force-controlled unicycle with a CLF/CBF QP.",
    )
    parser.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None,
        help=f"logging level (default {settings.log_level})",
    )
    sub = parser.add_subparsers(dest="task", required=True)

    sim = sub.add_parser("simulate", help="run one controller on a scenario")
    sim.add_argument("scenario", nargs="?", help="scenario file or shipped scenario name")
    sim.add_argument("--scenario", dest="scenario_opt")
    sim.add_argument(
        "--controller", choices=[k.value for k in ControllerKind],
        default=ControllerKind.CLF_CBF_QP.value,
    )
    sim.add_argument("--out", help="CSV output path")
    sim.add_argument("--svg", help="SVG output path")
    sim.add_argument("--dt", type=float)
    sim.add_argument("--tmax", type=float)

    cmp_ = sub.add_parser("compare", help="run all three controllers on a scenario")
    cmp_.add_argument("scenario", nargs="?")
    cmp_.add_argument("--scenario", dest="scenario_opt")
    cmp_.add_argument("--out", help="CSV path prefix, one file per controller")
    cmp_.add_argument("--svg", help="combined SVG output path")
    cmp_.add_argument("--dt", type=float)
    cmp_.add_argument("--tmax", type=float)

    ver = sub.add_parser("verify", help="run the property suites")
    ver.add_argument("suite", nargs="?", choices=["clf", "qp", "all"])
    ver.add_argument("--suite", dest="suite_opt", choices=["clf", "qp", "all"])
    ver.add_argument("--samples", type=int)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--scenario", dest="scenario_opt", help="scenario whose gains are verified")
    return parser


def parse_command(argv: Sequence[str] | None = None) -> tuple[Command, str]:
    """Parse argv into a validated Command and the log level to use."""
    parser = create_parser()
    args = parser.parse_args(argv)
    level = args.log_level or settings.log_level

    if args.task == "verify":
        data = {"task": "verify", "suite": args.suite_opt or args.suite or "all"}
        if args.samples is not None:
            data["samples"] = args.samples
        if args.seed is not None:
            data["seed"] = args.seed
        if args.scenario_opt:
            data["scenario_path"] = args.scenario_opt
    else:
        scenario = args.scenario_opt or args.scenario
        if not scenario:
            parser.error(f"{args.task}: a scenario is required")
        data = {"task": args.task, "scenario_path": scenario, "dt": args.dt, "t_max": args.tmax}
        if args.task == "simulate":
            data.update(controller=args.controller, out_csv=args.out, out_svg=args.svg)
        else:
            data.update(out_csv_prefix=args.out, out_svg=args.svg)

    try:
        command = _command_adapter.validate_python(data)
    except ValidationError as exc:
        parser.error(str(exc))
    return command, level


def _overrides(command: SimulateCommand | CompareCommand) -> dict:
    return {"dt": command.dt, "t_max": command.t_max}


def _outputs_dir() -> Path:
    out = Path(settings.outputs_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_summary(scenario: Scenario, kind: ControllerKind, log: TrajectoryLog) -> tuple[bool, str]:
    # The barrier controller must keep h >= 0 at every logged row
    safe = log.min_h() >= 0.0
    ok = safe or kind is not ControllerKind.CLF_CBF_QP
    last = log.rows[-1] if log.rows else None
    final_rho = last.rho if last else math.nan
    t_end = last.t if last else math.nan
    regions = ",".join(f"{k}:{n}" for k, n in log.region_counts().items()) or "-"
    line = (
        f"scenario={scenario.name} controller={kind.value} "
        f"status={'ok' if ok else 'unsafe'} rows={len(log)} t_end={t_end:.6g} "
        f"converged={str(log.converged).lower()} final_rho={final_rho:.6g} "
        f"min_h={log.min_h():.6g} min_dist={log.min_obstacle_distance(scenario.obstacles):.6g}"
        f" regions={regions}"
    )
    return ok, line


def _load(task: str, ref: str, overrides: dict | None = None) -> Scenario | None:
    try:
        return load_scenario(ref, overrides)
    except SCENARIO_ERRORS as exc:
        logger.error(f"Could not load scenario: {exc}")
        print(f"task={task} status=error error={type(exc).__name__}: {exc}")
        return None


def _simulate(command: SimulateCommand) -> int:
    scenario = _load("simulate", command.scenario_path, _overrides(command))
    if scenario is None:
        return EXIT_FAILED
    kind = command.controller
    try:
        log = run(scenario, kind)
    except RUN_ERRORS as exc:
        logger.error(f"Run {scenario.name}/{kind.value} aborted: {exc}")
        print(
            f"task=simulate controller={kind.value} status=error "
            f"error={type(exc).__name__}: {exc}"
        )
        return EXIT_FAILED

    stem = f"{scenario.name}_{kind.value}"
    csv_path = command.out_csv or str(_outputs_dir() / f"{stem}.csv")
    svg_path = command.out_svg or str(_outputs_dir() / f"{stem}.svg")
    try:
        export_csv(log, csv_path)
        export_svg([(kind.value, log)], scenario, svg_path)
    except OSError as exc:
        print(f"task=simulate status=error error={exc}")
        return EXIT_FAILED

    ok, line = _run_summary(scenario, kind, log)
    print(f"task=simulate {line} csv={csv_path} svg={svg_path}")
    return EXIT_OK if ok else EXIT_FAILED


def _compare(command: CompareCommand) -> int:
    scenario = _load("compare", command.scenario_path, _overrides(command))
    if scenario is None:
        return EXIT_FAILED
    prefix = command.out_csv_prefix or str(_outputs_dir() / scenario.name)
    svg_path = command.out_svg or str(_outputs_dir() / f"{scenario.name}_compare.svg")

    status = EXIT_OK
    logs: list[tuple[str, TrajectoryLog]] = []
    for kind in ControllerKind:
        try:
            log = run(scenario, kind)
        except RUN_ERRORS as exc:
            logger.error(f"Run {scenario.name}/{kind.value} aborted: {exc}")
            print(
                f"task=compare controller={kind.value} status=error "
                f"error={type(exc).__name__}: {exc}"
            )
            status = EXIT_FAILED
            continue
        csv_path = f"{prefix}_{kind.value}.csv"
        try:
            export_csv(log, csv_path)
        except OSError as exc:
            print(f"task=compare controller={kind.value} status=error error={exc}")
            status = EXIT_FAILED
            continue
        ok, line = _run_summary(scenario, kind, log)
        print(f"task=compare {line} csv={csv_path}")
        if not ok:
            status = EXIT_FAILED
        logs.append((kind.value, log))

    if logs:
        try:
            export_svg(logs, scenario, svg_path)
        except OSError as exc:
            print(f"task=compare status=error error={exc}")
            return EXIT_FAILED
        print(f"task=compare scenario={scenario.name} status=ok paths={len(logs)} svg={svg_path}")
    return status


def _verify(command: VerifyCommand) -> int:
    reports = []
    if command.suite in ("clf", "all"):
        scenario = _load("verify", command.scenario_path)
        if scenario is None:
            return EXIT_FAILED
        reports.append(verify_clf(scenario.gains, command.samples, command.seed))
    if command.suite in ("qp", "all"):
        reports.append(verify_qp(command.samples, command.seed))

    status = EXIT_OK
    for report in reports:
        for check in report.failures():
            print(
                f"task=verify suite={report.suite} check={check.name} status=fail "
                f"worst={check.worst:.3e} tol={check.tolerance:.1e}"
            )
        print(report.summary())
        if not report.passed:
            status = EXIT_FAILED
    return status


def dispatch(command: Command) -> int:
    """Execute one command; the exit status is 0 iff every run or check succeeded."""
    if isinstance(command, SimulateCommand):
        return _simulate(command)
    if isinstance(command, CompareCommand):
        return _compare(command)
    return _verify(command)


def main(argv: Sequence[str] | None = None) -> int:
    command, level = parse_command(argv)
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    return dispatch(command)
