"""Closed-loop runs of the three controllers on the shipped scenarios."""

import math

import numpy as np
import pytest

from app.core.clf import error_coords, lyapunov
from app.core.errors import UnsafeStart
from app.core.qp import active_set_oracle
from app.core.vehicle import accels_from_torques, polar_pose
from app.models.enums import ControllerKind, QpRegion
from app.schemas.vehicle import CartesianState, WheelTorques
from app.services.export_service import export_csv
from app.services.simulation_service import (
    Simulator,
    batch_certificates,
    run,
    simulate_nominal_closed_loop,
)


def test_barrier_controller_parks_safely(barrier_run, sim_scenario):
    log, _ = barrier_run
    assert log.min_h() >= 0.0
    assert log.min_obstacle_distance(sim_scenario.obstacles) >= 0.3
    assert log.final_distance() <= 0.05
    assert log.controller is ControllerKind.CLF_CBF_QP


def test_barrier_controller_is_safe_on_the_bench_scenario(exp_scenario):
    log = run(exp_scenario, ControllerKind.CLF_CBF_QP)
    assert log.min_h() >= 0.0
    assert log.min_obstacle_distance(exp_scenario.obstacles) >= 0.2


def test_log_invariants(barrier_run, sim_scenario):
    log, steps = barrier_run
    t = np.array(log.column("t"))
    assert t[0] == 0.0
    assert np.all(np.diff(t) > 0)
    assert len(steps) == len(log)
    # Starting at rest the barrier row has b2 = 0 and is dropped
    assert log.rows[0].region is QpRegion.DEGENERATE
    assert t[-1] <= sim_scenario.t_max + 1e-9


def test_every_step_matches_the_oracle(barrier_run, sim_scenario):
    _, steps = barrier_run
    regions = set()
    for record in steps:
        row = record.row
        if row.region is None:
            # Parked: u = 0 without solving
            continue
        u_bar = np.array([row.u_v / row.rho, row.u_omega])
        oracle = active_set_oracle(record.clf_row, record.cbf_rows, sim_scenario.qp)
        assert np.max(np.abs(u_bar - oracle)) <= 1e-8 * (1.0 + np.max(np.abs(oracle))), row.t
        cbf = record.cbf_rows[0]
        bu = float(np.hypot(*cbf.b)) * float(np.hypot(*u_bar))
        assert row.f2_residual <= 1e-10 * (1.0 + abs(cbf.a) + bu), row.t
        regions.add(row.region)
    assert QpRegion.DEGENERATE in regions
    assert len(regions) >= 2


def test_logged_certificates_recompute(barrier_run, sim_scenario):
    log, _ = barrier_run
    gains = sim_scenario.gains
    for row in log.rows[::50]:
        state = CartesianState(x=row.x, y=row.y, theta=row.theta, v=row.v, omega=row.omega)
        pose = polar_pose(state, prev_psi=row.psi)
        v_total = lyapunov(pose, error_coords(state, pose, gains), gains).v_total
        assert v_total == pytest.approx(row.V, rel=1e-10, abs=1e-12)


def test_logged_torques_reproduce_the_input(barrier_run, sim_scenario):
    log, _ = barrier_run
    for row in log.rows[::100]:
        u = accels_from_torques(
            sim_scenario.vehicle, WheelTorques(tau_l=row.tau_l, tau_r=row.tau_r)
        )
        assert u.u_v == pytest.approx(row.u_v, rel=1e-12, abs=1e-12)
        assert u.u_omega == pytest.approx(row.u_omega, rel=1e-12, abs=1e-12)


def test_unwrapped_psi_is_continuous(barrier_run):
    log, _ = barrier_run
    assert np.max(np.abs(np.diff(log.column("psi")))) < math.pi


def test_clf_qp_applies_zero_input_when_decreasing(clf_qp_run):
    for r in clf_qp_run.rows:
        if r.region is not QpRegion.BOTH_INACTIVE:
            continue
        assert (r.u_v, r.u_omega) == (0.0, 0.0)
        assert r.f1_residual < 0.0
    for r in clf_qp_run.rows:
        if r.region is QpRegion.CLF_ACTIVE:
            assert r.f1_residual == pytest.approx(0.0, abs=1e-9 * (1.0 + abs(r.V)))


def test_nominal_rows_carry_no_region(nominal_run):
    assert all(r.region is None for r in nominal_run.rows)
    assert nominal_run.controller is ControllerKind.NOMINAL


def test_runs_are_bit_identical(sim_scenario, tmp_path):
    short = sim_scenario.model_copy(update={"t_max": 1.0})
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    export_csv(run(short, ControllerKind.CLF_CBF_QP), first)
    export_csv(run(short, ControllerKind.CLF_CBF_QP), second)
    assert first.read_bytes() == second.read_bytes()


def test_unsafe_start_is_rejected(sim_scenario):
    # Inside the obstacle; model_copy skips the scenario validator
    inside = sim_scenario.model_copy(
        update={"init": CartesianState(x=-2.0, y=0.1, theta=0.0)}
    )
    with pytest.raises(UnsafeStart):
        Simulator(inside, ControllerKind.CLF_CBF_QP).run()


def test_run_stops_once_parked(sim_scenario):
    # On the manifold z = omega_err = 0 inside rho_stop
    parked = sim_scenario.model_copy(
        update={"init": CartesianState(x=-0.002, y=0.0, theta=0.0, v=0.004)}
    )
    log = run(parked, ControllerKind.CLF_QP)
    assert log.converged
    assert len(log) == 1
    assert log.rows[-1].region is None
    assert (log.rows[-1].u_v, log.rows[-1].u_omega) == (0.0, 0.0)


def test_nominal_closed_loop_decays_exponentially(scenario_gains):
    states = np.array([[-1.0, 0.0, 0.0, 0.0, 0.0], [-2.5, 0.0, 0.0, 0.0, 0.0]])
    batch = simulate_nominal_closed_loop(scenario_gains, states, dt=1e-3, t_end=2.0)
    z, omega_err, v_total = batch_certificates(batch, scenario_gains)
    k = int(round(1.0 / 1e-3))
    assert z[k] == pytest.approx(z[0] * math.exp(-scenario_gains.k_z), rel=1e-6)
    assert np.all(np.abs(omega_err) <= 1e-12)
    assert np.all(np.diff(v_total, axis=0) < 0.0)


def test_simulate_nominal_closed_loop_rejects_bad_dt(scenario_gains):
    with pytest.raises(ValueError):
        simulate_nominal_closed_loop(scenario_gains, np.zeros((1, 5)) - 1.0, dt=0.0, t_end=1.0)


def test_nominal_input_satisfies_the_clf_row(nominal_run):
    # f1 = a1 + b1 . u_nom_bar; the margin keeps the nominal law feasible with delta = 0
    rows = nominal_run.rows[:-1] if nominal_run.converged else nominal_run.rows
    assert len(rows) > 1000
    assert max(r.f1_residual for r in rows) <= 1e-9


def test_run_freezes_below_rho_min(sim_scenario):
    # Moving, but already inside rho_min: no pose is defined, so the input is cut
    start = CartesianState(x=-5e-7, y=0.0, theta=0.0, v=0.3)
    log = run(sim_scenario.model_copy(update={"init": start}), ControllerKind.CLF_CBF_QP)
    assert log.converged
    assert len(log) == 1
    last = log.rows[-1]
    assert last.region is None
    assert (last.u_v, last.u_omega, last.tau_l, last.tau_r) == (0.0, 0.0, 0.0, 0.0)
    assert last.rho == pytest.approx(5e-7)


def test_nominal_closed_loop_holds_parked_trajectories(scenario_gains):
    states = np.array([[-1.0, 0.0, 0.0, 0.0, 0.0], [-0.5, 0.0, 0.0, 0.0, 0.0]])
    batch = simulate_nominal_closed_loop(scenario_gains, states, dt=1e-3, t_end=20.0, rho_stop=0.05)
    rho = np.hypot(batch.states[..., 0], batch.states[..., 1])
    # Every trajectory parked well before the horizon, which ends the integration
    assert len(batch.t) < 20001
    assert np.all(rho[-1] < 0.05)
    # A parked trajectory stays put
    held = int(np.argmax(rho[:, 1] < 0.05))
    assert np.all(batch.states[held:, 1] == batch.states[held, 1])
    _, _, v_total = batch_certificates(batch, scenario_gains)
    assert np.all(np.diff(v_total, axis=0) <= 1e-12)
