import pytest

from app.core.errors import ScenarioParseError, ScenarioValidationError
from app.services.scenario_service import load_scenario, resolve_scenario_path, write_scenario
from tests.conftest import SCENARIOS_DIR


def _variant(tmp_path, old: str, new: str, name: str = "variant"):
    text = (SCENARIOS_DIR / "paper_sim.toml").read_text(encoding="utf-8")
    assert old in text
    path = tmp_path / f"{name}.toml"
    path.write_text(text.replace(old, new), encoding="utf-8")
    return path


def test_shipped_scenario_values(sim_scenario):
    s = sim_scenario
    assert s.name == "paper_sim"
    assert (s.init.x, s.init.y, s.init.theta) == (-3.15, 2.96, -1.43)
    assert s.gains.lam == 3.0
    assert s.gains.epsilon == pytest.approx(0.025)
    assert s.qp.gamma == 2.0
    assert s.obstacles[0].radius == 0.3
    assert s.steps_per_control == 1


def test_bare_names_resolve_to_the_scenarios_dir():
    assert resolve_scenario_path("paper_sim").name == "paper_sim.toml"
    assert str(resolve_scenario_path("some/where.toml")) == "some/where.toml"


def test_lambda_below_one_is_rejected(tmp_path):
    path = _variant(tmp_path, "lambda = 3.0", "lambda = 0.5")
    with pytest.raises(ScenarioValidationError) as info:
        load_scenario(path)
    assert "gains" in str(info.value)


def test_gamma_is_derived_from_m_weight(tmp_path):
    path = _variant(tmp_path, "m_weight = 1.0", "m_weight = 3.0")
    assert load_scenario(path).qp.gamma == pytest.approx(4.0 / 3.0)


def test_unknown_keys_are_rejected(tmp_path):
    path = _variant(tmp_path, "seed = 0", "seed = 0\nsteps = 4")
    with pytest.raises(ScenarioValidationError):
        load_scenario(path)


def test_unsafe_initial_state_is_rejected(tmp_path):
    path = _variant(tmp_path, "x = -3.15\ny = 2.96", "x = -2.0\ny = 0.1")
    with pytest.raises(ScenarioValidationError):
        load_scenario(path)


def test_control_period_must_be_a_multiple_of_dt(tmp_path):
    path = _variant(tmp_path, "control_dt = 0.001", "control_dt = 0.0025")
    with pytest.raises(ScenarioValidationError):
        load_scenario(path)


def test_bad_toml_is_a_parse_error(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[vehicle\nmass = 1\n", encoding="utf-8")
    with pytest.raises(ScenarioParseError) as info:
        load_scenario(path)
    assert "invalid TOML" in str(info.value)


def test_missing_file_is_a_parse_error(tmp_path):
    with pytest.raises(ScenarioParseError):
        load_scenario(tmp_path / "absent.toml")


def test_overrides_replace_sim_values():
    s = load_scenario(SCENARIOS_DIR / "paper_sim.toml", {"dt": 0.002, "t_max": 1.5})
    assert s.dt == 0.002
    assert s.control_dt == 0.002
    assert s.t_max == 1.5


def test_written_scenario_loads_back_equal(tmp_path, sim_scenario):
    path = tmp_path / "paper_sim.toml"
    write_scenario(sim_scenario, path)
    assert load_scenario(path) == sim_scenario


@pytest.mark.parametrize(("dt", "steps"), [(0.0003, 4), (0.0001, 10), (0.002, 1)])
def test_dt_override_derives_a_compatible_control_period(dt, steps):
    s = load_scenario(SCENARIOS_DIR / "paper_sim.toml", {"dt": dt})
    assert s.dt == dt
    assert s.steps_per_control == steps
    assert s.control_dt == pytest.approx(steps * dt)
