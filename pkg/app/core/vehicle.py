"""Vehicle model: unicycle kinematics with double-integrator velocities, the wheel
torque feedback transform, polar geometry, and a fixed-step RK4 integrator.

All functions are pure.
"""

import math
from typing import Callable

import numpy as np

from app.config import settings
from app.core.errors import DegeneratePose
from app.schemas.vehicle import (
    CartesianState,
    ControlInput,
    PolarPose,
    VehicleParams,
    WheelTorques,
)

TWO_PI = 2.0 * math.pi


def _rhs(y: np.ndarray, u_v: float, u_omega: float) -> np.ndarray:
    _, _, theta, v, omega = y
    return np.array([v * math.cos(theta), v * math.sin(theta), omega, u_v, u_omega])


def cartesian_rhs(state: CartesianState, u: ControlInput) -> np.ndarray:
    """Time derivative (x', y', theta', v', omega')."""
    return _rhs(state.as_array(), u.u_v, u.u_omega)


def _torque_matrix(params: VehicleParams) -> np.ndarray:
    k = params.inertia / (2.0 * params.axle_param)
    return 0.5 * params.wheel_radius * np.array(
        [[params.mass, k], [params.mass, -k]]
    )


def wheel_torque_map(params: VehicleParams, u: ControlInput) -> WheelTorques:
    """Feedback transform that turns the force balance into v' = u_v, omega' = u_omega."""
    tau = _torque_matrix(params) @ np.array([u.u_v, u.u_omega])
    return WheelTorques(tau_l=float(tau[0]), tau_r=float(tau[1]))


def accels_from_torques(params: VehicleParams, torques: WheelTorques) -> ControlInput:
    mixing = np.array([[1.0, 1.0], [2.0 * params.axle_param, -2.0 * params.axle_param]])
    forces = mixing @ np.array([torques.tau_l, torques.tau_r]) / params.wheel_radius
    return ControlInput(
        u_v=float(forces[0] / params.mass),
        u_omega=float(forces[1] / params.inertia),
    )


def unwrap_angle(angle: float, reference: float) -> float:
    """Shift `angle` by the multiple of 2*pi that brings it nearest to `reference`."""
    return angle + TWO_PI * round((reference - angle) / TWO_PI)


def polar_pose(
    state: CartesianState,
    prev_psi: float | None = None,
    rho_min: float | None = None,
) -> PolarPose:
    rho_min = settings.rho_min if rho_min is None else rho_min
    rho = math.hypot(state.x, state.y)
    if rho < rho_min:
        raise DegeneratePose(rho, rho_min)
    psi = math.atan2(-state.y, -state.x)
    if prev_psi is not None:
        psi = unwrap_angle(psi, prev_psi)
    return PolarPose(rho=rho, alpha=psi - state.theta, psi=psi)


def align_heading(state: CartesianState) -> CartesianState:
    """Shift theta by a multiple of 2*pi so that alpha lies in (-pi, pi]."""
    psi = math.atan2(-state.y, -state.x)
    alpha = psi - state.theta
    shift = TWO_PI * math.ceil((alpha - math.pi) / TWO_PI)
    if shift == 0.0:
        return state
    return state.model_copy(update={"theta": state.theta + shift})


def polar_rhs(pose: PolarPose, v: float, omega: float) -> np.ndarray:
    """Time derivative (rho', alpha', psi') of the polar kinematics."""
    if pose.rho <= 0.0:
        raise DegeneratePose(pose.rho, 0.0)
    s = v / pose.rho * math.sin(pose.alpha)
    return np.array([-v * math.cos(pose.alpha), s - omega, s])


def rk4(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta 4 step of y' = f(y)."""
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(state: CartesianState, u: ControlInput, dt: float) -> CartesianState:
    """Advance the Cartesian state by dt with the input held constant (zero-order hold)."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    u_v, u_omega = u.u_v, u.u_omega
    y = rk4(lambda s: _rhs(s, u_v, u_omega), state.as_array(), dt)
    return CartesianState.from_array(y)
