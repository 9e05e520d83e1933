"""Closed-loop simulation of the three controllers on a scenario.

The Cartesian state is integrated with RK4 under a zero-order hold; the control is
recomputed every `control_dt` from the polar pose (with psi unwrapped against the
previous control step), the velocity errors and the constraint rows.
"""

import logging
import math
from typing import Callable, NamedTuple

import numpy as np

from app.config import settings
from app.core.cbf import barrier, cbf_terms, is_safe
from app.core.clf import (
    clf_terms,
    desired_velocities_kernel,
    error_coords,
    lyapunov,
    lyapunov_kernel,
    nominal_accels_kernel,
    nominal_control,
)
from app.core.errors import DegenerateQp, UnsafeStart
from app.core.qp import gamma_f, solve_multi
from app.core.vehicle import TWO_PI, align_heading, polar_pose, rk4, rk4_step, wheel_torque_map
from app.models.enums import ControllerKind, QpRegion
from app.models.trajectory import TrajectoryLog, TrajectoryRow
from app.schemas.controller import Gains
from app.schemas.qp import ConstraintRow
from app.schemas.scenario import Scenario
from app.schemas.vehicle import CartesianState, ControlInput

logger = logging.getLogger(__name__)


class StepRecord(NamedTuple):
    """What the controller saw and chose at one control step."""

    row: TrajectoryRow
    clf_row: ConstraintRow
    cbf_rows: list[ConstraintRow]


StepObserver = Callable[[StepRecord], None]


def _dot(a, b) -> float:
    return a[0] * b[0] + a[1] * b[1]


class Simulator:
    def __init__(
        self,
        scenario: Scenario,
        controller: ControllerKind,
        observer: StepObserver | None = None,
    ):
        self.scenario = scenario
        self.controller = controller
        self.observer = observer

    def _check_start(self, state: CartesianState) -> None:
        sc = self.scenario
        for i, ob in enumerate(sc.obstacles):
            if not is_safe(state, ob, sc.barrier):
                h, _ = barrier(state, ob, sc.barrier)
                raise UnsafeStart(f"Initial state violates h >= 0 for obstacle {i} (h={h!r})")

    def _select(
        self,
        u_nom: ControlInput,
        rho: float,
        clf_row: ConstraintRow,
        cbf_rows: list[ConstraintRow],
    ) -> tuple[tuple[float, float], QpRegion | None, float, float]:
        """Scaled input u_bar, region and residuals for the configured controller."""
        p = self.scenario.qp
        if self.controller is ControllerKind.NOMINAL:
            u_bar = (u_nom.u_v / rho, u_nom.u_omega)
            # The nominal law is not a QP: report the raw CLF inequality it satisfies
            f1 = clf_row.a + _dot(clf_row.b, u_bar)
            f2 = max(r.a + _dot(r.b, u_bar) for r in cbf_rows)
            return u_bar, None, f1, f2

        if self.controller is ControllerKind.CLF_QP:
            sol = solve_multi(clf_row, [], p)
            f2 = max(r.a + _dot(r.b, sol.u) for r in cbf_rows)
            return sol.u, sol.region, sol.f1_residual, f2

        sol = solve_multi(clf_row, cbf_rows, p)
        return sol.u, sol.region, sol.f1_residual, sol.f2_residual

    def run(self) -> TrajectoryLog:
        sc = self.scenario
        gains = sc.gains
        state = align_heading(sc.init)
        self._check_start(state)

        log = TrajectoryLog(controller=self.controller)
        n_control = int(math.floor(sc.t_max / sc.control_dt + 1e-9))
        substeps = sc.steps_per_control
        prev_psi: float | None = None
        logger.info(
            f"Simulating {sc.name} with {self.controller.value}: "
            f"{n_control} control steps of {sc.control_dt}s"
        )

        for k in range(n_control + 1):
            t = k * sc.control_dt
            pose = polar_pose(state, prev_psi, rho_min=0.0)
            prev_psi = pose.psi
            # Below rho_min the run freezes with u = 0; certificates use the floored radius
            frozen = pose.rho < settings.rho_min
            if frozen:
                logger.warning(f"rho={pose.rho!r} fell below rho_min at t={t:.6f}; freezing")
                eval_pose = pose.model_copy(update={"rho": settings.rho_min})
            else:
                eval_pose = pose
            err = error_coords(state, eval_pose, gains)
            lyap = lyapunov(eval_pose, err, gains)
            a1, b1 = clf_terms(state, eval_pose, err, gains)
            clf_row = ConstraintRow(a=a1, b=b1)
            cbf_rows = [
                ConstraintRow(a=a2, b=b2)
                for a2, b2 in (cbf_terms(state, eval_pose, ob, sc.barrier) for ob in sc.obstacles)
            ]
            barriers = [barrier(state, ob, sc.barrier) for ob in sc.obstacles]
            h, h0 = min(barriers)

            converged = frozen or (
                pose.rho < sc.rho_stop
                and math.hypot(err.z, err.omega_err) < settings.converged_zeta
            )
            try:
                if converged:
                    u_bar = (0.0, 0.0)
                    region = None
                    f1 = gamma_f(a1, sc.qp.gamma)
                    f2 = max(r.a for r in cbf_rows)
                else:
                    u_nom = nominal_control(state, pose, gains)
                    u_bar, region, f1, f2 = self._select(u_nom, pose.rho, clf_row, cbf_rows)
            except DegenerateQp as exc:
                exc.row = {
                    "t": t,
                    **state.model_dump(),
                    **pose.model_dump(),
                    **err.model_dump(),
                    "h": h,
                    "h0": h0,
                }
                logger.error(f"Degenerate QP at t={t:.6f}: {exc}")
                raise

            u = ControlInput(u_v=pose.rho * u_bar[0], u_omega=u_bar[1])
            torques = wheel_torque_map(sc.vehicle, u)
            row = TrajectoryRow(
                t=t,
                x=state.x,
                y=state.y,
                theta=state.theta,
                v=state.v,
                omega=state.omega,
                rho=pose.rho,
                alpha=pose.alpha,
                psi=pose.psi,
                z=err.z,
                omega_err=err.omega_err,
                V=lyap.v_total,
                W=lyap.w,
                h=h,
                h0=h0,
                u_v=u.u_v,
                u_omega=u.u_omega,
                tau_l=torques.tau_l,
                tau_r=torques.tau_r,
                region=region,
                f1_residual=f1,
                f2_residual=f2,
            )
            log.append(row)
            if self.observer is not None:
                self.observer(StepRecord(row=row, clf_row=clf_row, cbf_rows=cbf_rows))

            if converged:
                log.converged = True
                logger.info(f"Converged at t={t:.3f}s (rho={pose.rho:.3e})")
                break
            if k == n_control:
                break
            for _ in range(substeps):
                state = rk4_step(state, u, sc.dt)

        logger.info(
            f"Finished {sc.name}/{self.controller.value}: rows={len(log)} "
            f"converged={log.converged} min_h={log.min_h():.6g}"
        )
        return log


def run(
    scenario: Scenario,
    controller: ControllerKind,
    observer: StepObserver | None = None,
) -> TrajectoryLog:
    return Simulator(scenario, controller, observer).run()


# --- continuous-feedback nominal closed loop (batch) ---


class NominalBatch(NamedTuple):
    # (K,), (K, N, 5), (K, N)
    t: np.ndarray
    states: np.ndarray
    psi: np.ndarray


def _batch_polar(y: np.ndarray, psi_ref: np.ndarray):
    rho = np.hypot(y[:, 0], y[:, 1])
    psi = np.arctan2(-y[:, 1], -y[:, 0])
    psi = psi + TWO_PI * np.round((psi_ref - psi) / TWO_PI)
    return rho, psi - y[:, 2], psi


def _closed_loop_rhs(y: np.ndarray, psi_ref: np.ndarray, gains: Gains) -> np.ndarray:
    rho, alpha, psi = _batch_polar(y, psi_ref)
    v, omega, theta = y[:, 3], y[:, 4], y[:, 2]
    u_v, u_omega = nominal_accels_kernel(rho, alpha, psi, v, omega, gains)
    return np.stack([v * np.cos(theta), v * np.sin(theta), omega, u_v, u_omega], axis=1)


def simulate_nominal_closed_loop(
    gains: Gains,
    states: np.ndarray,
    dt: float,
    t_end: float,
    rho_stop: float | None = None,
) -> NominalBatch:
    """Integrate N Cartesian states under the nominal law, re-evaluated at every RK4 stage.

    `states` is (N, 5) with columns (x, y, theta, v, omega). Headings are first
    shifted so that alpha starts in (-pi, pi]. With `rho_stop`, a trajectory is held
    fixed once its rho drops below it, and integration ends early when all are held.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    y = np.array(states, dtype=float, copy=True)
    psi = np.arctan2(-y[:, 1], -y[:, 0])
    y[:, 2] += TWO_PI * np.ceil((psi - y[:, 2] - math.pi) / TWO_PI)

    n_steps = int(math.floor(t_end / dt + 1e-9))
    out = [y]
    psis = [psi]
    for _ in range(n_steps):
        ref = psis[-1]
        moving = None if rho_stop is None else np.hypot(y[:, 0], y[:, 1]) >= rho_stop
        if moving is not None and not moving.any():
            break
        stepped = rk4(lambda s: _closed_loop_rhs(s, ref, gains), y, dt)
        y = stepped if moving is None else np.where(moving[:, None], stepped, y)
        out.append(y)
        psis.append(_batch_polar(y, ref)[2])
    return NominalBatch(t=np.arange(len(out)) * dt, states=np.stack(out), psi=np.stack(psis))


def batch_certificates(batch: NominalBatch, gains: Gains):
    """(z, omega_err, V) along a batch, each (K, N)."""
    s = batch.states
    x, y, theta, v, omega = (s[..., i] for i in range(5))
    rho = np.hypot(x, y)
    alpha = batch.psi - theta
    v_star, omega_star = desired_velocities_kernel(rho, alpha, batch.psi, gains)
    z = (v - v_star) / rho
    omega_err = omega - omega_star
    _, _, v_total, _ = lyapunov_kernel(rho, alpha, batch.psi, z, omega_err, gains)
    return z, omega_err, v_total
