from pathlib import Path

import pytest

from app.models.enums import ControllerKind
from app.schemas.barrier import BarrierParams, CircularObstacle
from app.schemas.controller import Gains
from app.schemas.qp import QpParams
from app.schemas.vehicle import VehicleParams
from app.services.scenario_service import load_scenario
from app.services.simulation_service import run

SCENARIOS_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture(scope="session")
def scenario_gains() -> Gains:
    return Gains(lam=3.0, k_rho=2.0, k_alpha=2.0, k_z=4.0, k_omega=4.0, mu=0.05)


@pytest.fixture(scope="session")
def vehicle() -> VehicleParams:
    return VehicleParams(mass=1.0, inertia=0.025, wheel_radius=0.03, axle_param=0.15)


@pytest.fixture(scope="session")
def barrier_params() -> BarrierParams:
    return BarrierParams(l_v=1.0, l_omega=1.0, alpha_h_slope=2.0)


@pytest.fixture(scope="session")
def obstacle() -> CircularObstacle:
    return CircularObstacle(cx=-2.0, cy=0.0, radius=0.3, scale=40.0)


@pytest.fixture(scope="session")
def qp_params() -> QpParams:
    return QpParams.stability(1.0)


@pytest.fixture(scope="session")
def sim_scenario():
    return load_scenario(SCENARIOS_DIR / "paper_sim.toml")


@pytest.fixture(scope="session")
def exp_scenario():
    return load_scenario(SCENARIOS_DIR / "paper_exp.toml")


@pytest.fixture(scope="session")
def barrier_run(sim_scenario):
    """CLF-CBF-QP run of the simulation scenario with every control step's constraint rows."""
    steps = []
    log = run(sim_scenario, ControllerKind.CLF_CBF_QP, observer=steps.append)
    return log, steps


@pytest.fixture(scope="session")
def clf_qp_run(sim_scenario):
    return run(sim_scenario, ControllerKind.CLF_QP)


@pytest.fixture(scope="session")
def nominal_run(sim_scenario):
    return run(sim_scenario, ControllerKind.NOMINAL)
