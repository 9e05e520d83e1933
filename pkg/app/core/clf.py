"""Global strict control Lyapunov function in polar coordinates, the nominal
feedback-linearizing controller, and the CLF row of the gamma-m QP.

Coordinates: chi = (rho, alpha, psi, z, omega_err) with z = (v - v*) / rho and
omega_err = omega - omega*. The `*_kernel` functions accept floats or numpy arrays
of matching shape; the typed operations are thin wrappers over them.
"""

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from app.config import settings
from app.core.errors import DegeneratePose
from app.core.vehicle import polar_rhs
from app.schemas.controller import ErrorCoords, Gains, LyapunovBreakdown, SymMatrix2
from app.schemas.vehicle import CartesianState, ControlInput, PolarPose

SINC_SERIES_BELOW = 1e-4
LOG_SERIES_BELOW = 1e-4


class CertificateConstants(NamedTuple):
    p11: float
    p12: float
    p22: float
    lambda_max: float
    c_q: float


class WParts(NamedTuple):
    w1: np.ndarray
    w2: np.ndarray
    w: np.ndarray
    # grad W over (rho, alpha, psi)
    d_rho: np.ndarray
    d_alpha: np.ndarray
    d_psi: np.ndarray


# --- sinc ---

def sinc_kernel(s):
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < SINC_SERIES_BELOW
    safe = np.where(small, 1.0, s)
    s2 = s * s
    sinc = np.where(small, 1.0 - s2 / 6.0 + s2 * s2 / 120.0, np.sin(safe) / safe)
    sinc_prime = np.where(
        small,
        -s / 3.0 + s * s2 / 30.0,
        (safe * np.cos(safe) - np.sin(safe)) / (safe * safe),
    )
    return sinc, sinc_prime


def stable_sinc(s: float) -> tuple[float, float]:
    """Unnormalized sinc(s) = sin(s)/s and its derivative, smooth through s = 0."""
    sinc, sinc_prime = sinc_kernel(s)
    return float(sinc), float(sinc_prime)


# --- P, c_Q ---

def p_entries(k_rho: float, k_alpha: float, lam: float) -> tuple[float, float, float]:
    """Closed-form solution of A^T P + P A = -I for A = [[-k_alpha, -k_rho*lam], [k_rho, 0]]."""
    p11 = (1.0 + lam) / (2.0 * k_alpha * lam)
    p12 = 1.0 / (2.0 * k_rho * lam)
    p22 = (k_alpha**2 + k_rho**2 * lam**2 + k_rho**2 * lam) / (2.0 * k_alpha * k_rho**2 * lam)
    return p11, p12, p22


def p_det_closed_form(k_rho: float, k_alpha: float, lam: float) -> float:
    return (k_alpha**2 + k_rho**2 * lam**2 + 2.0 * k_rho**2 * lam + k_rho**2) / (
        4.0 * k_alpha**2 * k_rho**2 * lam
    )


def linear_part(gains: Gains) -> np.ndarray:
    """The Hurwitz matrix of the (alpha, psi) dynamics once the sinc terms are set to one."""
    return np.array([[-gains.k_alpha, -gains.k_rho * gains.lam], [gains.k_rho, 0.0]])


def _lambda_max(p11: float, p12: float, p22: float) -> float:
    return 0.5 * (p11 + p22 + math.hypot(p11 - p22, 2.0 * p12))


def p_matrix(gains: Gains) -> tuple[SymMatrix2, float, float]:
    p11, p12, p22 = p_entries(gains.k_rho, gains.k_alpha, gains.lam)
    p = SymMatrix2(p11=p11, p12=p12, p22=p22)
    return p, _lambda_max(p11, p12, p22), p.det


def c_q_from(gains: Gains, lambda_max: float) -> float:
    """Coefficient c such that the integral of Q over [0, W1] equals c * W1^2."""
    return (8.0 / math.pi**2) * (gains.k_rho**2 / gains.k_alpha) * gains.lam**2 * lambda_max**2


@lru_cache(maxsize=64)
def certificate_constants(gains: Gains) -> CertificateConstants:
    p, lambda_max, _ = p_matrix(gains)
    return CertificateConstants(p.p11, p.p12, p.p22, lambda_max, c_q_from(gains, lambda_max))


def c_q(gains: Gains) -> float:
    return certificate_constants(gains).c_q


def q_density(level, gains: Gains):
    """Q(l), the integrand whose integral over [0, W1] enters W."""
    lambda_max = certificate_constants(gains).lambda_max
    return (
        (16.0 / math.pi**2)
        * (gains.k_rho**2 / gains.k_alpha)
        * gains.lam**2
        * lambda_max**2
        * np.asarray(level, dtype=float)
    )


# --- W and its gradient ---

def w_kernel(
    rho, alpha, psi, gains: Gains, constants: CertificateConstants | None = None
) -> WParts:
    c = constants or certificate_constants(gains)
    lam = gains.lam
    w1 = 0.5 * (rho * rho + alpha * alpha + lam * psi * psi)
    w2 = c.p11 * alpha * alpha + 2.0 * c.p12 * alpha * psi + c.p22 * psi * psi
    w = w1 + w2 + c.c_q * w1 * w1
    k = 1.0 + 2.0 * c.c_q * w1
    return WParts(
        w1=w1,
        w2=w2,
        w=w,
        d_rho=k * rho,
        d_alpha=k * alpha + 2.0 * (c.p11 * alpha + c.p12 * psi),
        d_psi=k * lam * psi + 2.0 * (c.p12 * alpha + c.p22 * psi),
    )


def scalar_w(pose: PolarPose, gains: Gains) -> tuple[float, float, float, float]:
    """(W1, W2, W, W#) with W# = ln(W + 1)."""
    parts = w_kernel(pose.rho, pose.alpha, pose.psi, gains)
    return float(parts.w1), float(parts.w2), float(parts.w), math.log1p(float(parts.w))


def f_nom_kernel(rho, alpha, psi, gains: Gains):
    sinc2, _ = sinc_kernel(2.0 * alpha)
    cos_a = np.cos(alpha)
    return (
        -gains.k_rho * cos_a * cos_a * rho,
        -gains.k_alpha * alpha - gains.k_rho * sinc2 * gains.lam * psi,
        gains.k_rho * sinc2 * alpha,
    )


def f_nom(pose: PolarPose, gains: Gains) -> np.ndarray:
    """Drift of (rho, alpha, psi) on the manifold z = omega_err = 0."""
    return np.array([float(c) for c in f_nom_kernel(pose.rho, pose.alpha, pose.psi, gains)])


def g_nom(pose: PolarPose) -> np.ndarray:
    """Input matrix of (rho, alpha, psi) with respect to (z, omega_err)."""
    s, c = math.sin(pose.alpha), math.cos(pose.alpha)
    return np.array([[-pose.rho * c, 0.0], [s, -1.0], [s, 0.0]])


def w_dot_nominal_kernel(rho, alpha, psi, gains: Gains, parts: WParts | None = None):
    parts = parts or w_kernel(rho, alpha, psi, gains)
    f_rho, f_alpha, f_psi = f_nom_kernel(rho, alpha, psi, gains)
    return parts.d_rho * f_rho + parts.d_alpha * f_alpha + parts.d_psi * f_psi


def w_dot_nominal(pose: PolarPose, gains: Gains) -> float:
    return float(w_dot_nominal_kernel(pose.rho, pose.alpha, pose.psi, gains))


# --- V ---

def lyapunov_integral(w):
    """Integral of (1 - e^-s) over [0, ln(W + 1)], i.e. ln(W + 1) + 1/(W + 1) - 1."""
    w = np.asarray(w, dtype=float)
    small = w < LOG_SERIES_BELOW
    series = w * w * (0.5 - w * (2.0 / 3.0 - 0.75 * w))
    safe = np.where(small, 1.0, w)
    return np.where(small, series, np.log1p(safe) - safe / (1.0 + safe))


def lyapunov_kernel(rho, alpha, psi, z, omega_err, gains: Gains):
    """(parts, V, grad V) with grad over (rho, alpha, psi, z, omega_err)."""
    parts = w_kernel(rho, alpha, psi, gains)
    u_quad = 0.5 * (z * z / gains.k_z + omega_err * omega_err / gains.k_omega)
    v_total = gains.mu * lyapunov_integral(parts.w) + u_quad
    scale = gains.mu * parts.w / (parts.w + 1.0) ** 2
    grad = (
        scale * parts.d_rho,
        scale * parts.d_alpha,
        scale * parts.d_psi,
        z / gains.k_z,
        omega_err / gains.k_omega,
    )
    return parts, u_quad, v_total, grad


def lyapunov(pose: PolarPose, err: ErrorCoords, gains: Gains) -> LyapunovBreakdown:
    parts, u_quad, v_total, grad = lyapunov_kernel(
        pose.rho, pose.alpha, pose.psi, err.z, err.omega_err, gains
    )
    w = float(parts.w)
    return LyapunovBreakdown(
        w1=float(parts.w1),
        w2=float(parts.w2),
        w=w,
        w_sharp=math.log1p(w),
        u_quad=float(u_quad),
        v_total=float(v_total),
        grad=tuple(float(g) for g in grad),
    )


# --- velocities, rates, nominal control ---

def desired_velocities_kernel(rho, alpha, psi, gains: Gains):
    sinc2, _ = sinc_kernel(2.0 * alpha)
    v_star = gains.k_rho * np.cos(alpha) * rho
    omega_star = gains.k_alpha * alpha + gains.k_rho * sinc2 * (alpha + gains.lam * psi)
    return v_star, omega_star


def desired_velocities(pose: PolarPose, gains: Gains) -> tuple[float, float]:
    v_star, omega_star = desired_velocities_kernel(pose.rho, pose.alpha, pose.psi, gains)
    return float(v_star), float(omega_star)


def _check_rho(rho: float) -> None:
    if rho < settings.rho_min:
        raise DegeneratePose(rho, settings.rho_min)


def error_coords(state: CartesianState, pose: PolarPose, gains: Gains) -> ErrorCoords:
    _check_rho(pose.rho)
    v_star, omega_star = desired_velocities(pose, gains)
    return ErrorCoords(z=(state.v - v_star) / pose.rho, omega_err=state.omega - omega_star)


def desired_rates_kernel(rho, alpha, psi, v, omega, gains: Gains):
    """Time derivatives of (v*, omega*) along the actual (v, omega)."""
    sin_a = np.sin(alpha)
    psi_dot = v / rho * sin_a
    alpha_dot = psi_dot - omega
    # The 1/rho of alpha_dot cancels in v*'
    v_star_dot = gains.k_rho * (rho * omega * sin_a - v)
    sinc2, sinc2_prime = sinc_kernel(2.0 * alpha)
    omega_star_dot = gains.k_alpha * alpha_dot + gains.k_rho * (
        2.0 * alpha_dot * sinc2_prime * (alpha + gains.lam * psi)
        + sinc2 * (alpha_dot + gains.lam * psi_dot)
    )
    return v_star_dot, omega_star_dot


def desired_rates(state: CartesianState, pose: PolarPose, gains: Gains) -> tuple[float, float]:
    _check_rho(pose.rho)
    v_star_dot, omega_star_dot = desired_rates_kernel(
        pose.rho, pose.alpha, pose.psi, state.v, state.omega, gains
    )
    return float(v_star_dot), float(omega_star_dot)


def nominal_accels_kernel(rho, alpha, psi, v, omega, gains: Gains):
    """Feedback-linearizing (u_v, u_omega).

    The closed loop obeys z' = -k_z z and omega_err' = -k_omega omega_err.
    """
    v_star, omega_star = desired_velocities_kernel(rho, alpha, psi, gains)
    z = (v - v_star) / rho
    omega_err = omega - omega_star
    v_star_dot, omega_star_dot = desired_rates_kernel(rho, alpha, psi, v, omega, gains)
    cos_a = np.cos(alpha)
    u_v = v_star_dot - rho * (gains.k_rho * cos_a * cos_a * z + cos_a * z * z + gains.k_z * z)
    u_omega = omega_star_dot - gains.k_omega * omega_err
    return u_v, u_omega


def nominal_control(state: CartesianState, pose: PolarPose, gains: Gains) -> ControlInput:
    _check_rho(pose.rho)
    u_v, u_omega = nominal_accels_kernel(
        pose.rho, pose.alpha, pose.psi, state.v, state.omega, gains
    )
    return ControlInput(u_v=float(u_v), u_omega=float(u_omega))


# --- CLF row of the QP ---

def margin_kernel(rho, alpha, psi, z, omega_err, gains: Gains, parts: WParts | None = None):
    """sigma = |zeta|^2 / 2 - eps * W * W'|f_nom / (W + 1)^2, nonnegative since W'|f_nom <= 0."""
    parts = parts or w_kernel(rho, alpha, psi, gains)
    w_dot = w_dot_nominal_kernel(rho, alpha, psi, gains, parts)
    return 0.5 * (z * z + omega_err * omega_err) - gains.epsilon * parts.w * w_dot / (
        parts.w + 1.0
    ) ** 2


def margin(pose: PolarPose, err: ErrorCoords, gains: Gains) -> float:
    return float(margin_kernel(pose.rho, pose.alpha, pose.psi, err.z, err.omega_err, gains))


def clf_terms(
    state: CartesianState, pose: PolarPose, err: ErrorCoords, gains: Gains
) -> tuple[float, tuple[float, float]]:
    """(a1, b1) of the CLF constraint a1_bar + b1 . (u_bar + delta) <= 0.

    The decision variable is u_bar = (u_v / rho, u_omega), so b1 = (z / k_z, omega_err / k_omega).
    """
    _check_rho(pose.rho)
    rho, alpha, psi = pose.rho, pose.alpha, pose.psi
    z, omega_err = err.z, err.omega_err
    parts, _, _, grad = lyapunov_kernel(rho, alpha, psi, z, omega_err, gains)
    f_kappa = polar_rhs(pose, state.v, state.omega)
    v_star_dot, omega_star_dot = desired_rates(state, pose, gains)
    cos_a = math.cos(alpha)
    z_drift = -v_star_dot / rho + gains.k_rho * cos_a * cos_a * z + cos_a * z * z
    lf_v = (
        float(grad[0]) * f_kappa[0]
        + float(grad[1]) * f_kappa[1]
        + float(grad[2]) * f_kappa[2]
        + float(grad[3]) * z_drift
        - float(grad[4]) * omega_star_dot
    )
    sigma = float(margin_kernel(rho, alpha, psi, z, omega_err, gains, parts))
    return float(lf_v + sigma), (z / gains.k_z, omega_err / gains.k_omega)
