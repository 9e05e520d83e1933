"""Backstepped zeroing barrier h = h0(x, y) - l_v v^2 - l_omega omega^2 and the CBF row
of the gamma-m QP."""

import math

from app.core.errors import DegeneratePose
from app.schemas.barrier import AdmissibleField, BarrierParams
from app.schemas.vehicle import CartesianState, ControlInput, PolarPose


def barrier(
    state: CartesianState, field: AdmissibleField, params: BarrierParams
) -> tuple[float, float]:
    """(h, h0). h <= h0 always."""
    h0 = field.value(state.x, state.y)
    h = h0 - params.l_v * state.v**2 - params.l_omega * state.omega**2
    return h, h0


def is_safe(state: CartesianState, field: AdmissibleField, params: BarrierParams) -> bool:
    """h >= 0, i.e. l_v v^2 + l_omega omega^2 <= h0(x, y)."""
    h, _ = barrier(state, field, params)
    return h >= 0.0


def _lf_h0(state: CartesianState, field: AdmissibleField) -> float:
    gx, gy = field.gradient(state.x, state.y)
    return state.v * (gx * math.cos(state.theta) + gy * math.sin(state.theta))


def cbf_terms(
    state: CartesianState,
    pose: PolarPose,
    field: AdmissibleField,
    params: BarrierParams,
) -> tuple[float, tuple[float, float]]:
    """(a2, b2) of the CBF constraint a2 + b2 . u_bar <= 0 with u_bar = (u_v / rho, u_omega).

    b2 carries the rho scaling of the input matrix.
    """
    if pose.rho <= 0.0:
        raise DegeneratePose(pose.rho, 0.0)
    h, _ = barrier(state, field, params)
    a2 = -_lf_h0(state, field) - params.alpha_h_slope * h
    b2 = (2.0 * params.l_v * state.v * pose.rho, 2.0 * params.l_omega * state.omega)
    return a2, b2


def barrier_rate(
    state: CartesianState, field: AdmissibleField, params: BarrierParams, u: ControlInput
) -> float:
    """h' by the chain rule on the Cartesian dynamics with accelerations u."""
    return (
        _lf_h0(state, field)
        - 2.0 * params.l_v * state.v * u.u_v
        - 2.0 * params.l_omega * state.omega * u.u_omega
    )
