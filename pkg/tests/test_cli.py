import pytest

from app.main import EXIT_FAILED, EXIT_OK, main, parse_command
from app.models.enums import ControllerKind
from app.schemas.command import CompareCommand, SimulateCommand, VerifyCommand
from tests.conftest import SCENARIOS_DIR

SIM_SCENARIO = str(SCENARIOS_DIR / "paper_sim.toml")


def test_parse_simulate():
    command, level = parse_command(
        ["--log-level", "DEBUG", "simulate", SIM_SCENARIO, "--controller", "nominal", "--tmax", "2"]
    )
    assert isinstance(command, SimulateCommand)
    assert command.controller is ControllerKind.NOMINAL
    assert command.t_max == 2.0
    assert command.dt is None
    assert level == "DEBUG"


def test_parse_scenario_option_form():
    command, _ = parse_command(["compare", "--scenario", SIM_SCENARIO, "--out", "runs/x"])
    assert isinstance(command, CompareCommand)
    assert command.scenario_path == SIM_SCENARIO
    assert command.out_csv_prefix == "runs/x"


def test_parse_verify_defaults():
    command, _ = parse_command(["verify"])
    assert isinstance(command, VerifyCommand)
    assert command.suite == "all"
    assert command.samples == 100_000
    assert command.seed == 42

    command, _ = parse_command(["verify", "--suite", "qp", "--samples", "10", "--seed", "5"])
    assert (command.suite, command.samples, command.seed) == ("qp", 10, 5)


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate"],
        ["verify", "--samples", "0"],
        ["simulate", SIM_SCENARIO, "--tmax", "-1"],
        ["simulate", SIM_SCENARIO, "--controller", "pid"],
    ],
)
def test_parse_rejects_bad_arguments(argv):
    with pytest.raises(SystemExit):
        parse_command(argv)


def test_verify_qp_exits_ok(capsys):
    assert main(["verify", "qp", "--samples", "200"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "task=verify suite=qp status=ok" in out


def test_simulate_missing_scenario_fails(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.toml")]) == EXIT_FAILED
    out = capsys.readouterr().out
    assert "status=error" in out
    assert "ScenarioParseError" in out


def test_compare_writes_every_output(tmp_path, capsys):
    svg = tmp_path / "compare.svg"
    argv = ["compare", SIM_SCENARIO, "--tmax", "0.5", "--out", str(tmp_path / "run")]
    argv += ["--svg", str(svg)]
    assert main(argv) == EXIT_OK
    assert sorted(p.name for p in tmp_path.glob("run_*.csv")) == [
        f"run_{kind.value}.csv" for kind in sorted(ControllerKind, key=lambda k: k.value)
    ]
    assert svg.read_text(encoding="utf-8").startswith("<?xml")
    out = capsys.readouterr().out
    assert out.count("task=compare scenario=paper_sim") == 4


def test_simulate_writes_csv_and_svg(tmp_path, capsys):
    csv_path, svg_path = tmp_path / "one.csv", tmp_path / "one.svg"
    argv = ["simulate", SIM_SCENARIO, "--tmax", "0.2"]
    argv += ["--out", str(csv_path), "--svg", str(svg_path)]
    assert main(argv) == EXIT_OK
    assert csv_path.exists() and svg_path.exists()
    assert "controller=clf-cbf-qp status=ok" in capsys.readouterr().out
