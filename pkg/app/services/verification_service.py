"""Property suites for the Lyapunov certificate and the closed-form QP law.

Samples are drawn with `numpy.random.default_rng(seed)` and evaluated through the
vectorized kernels, so a report depends only on its inputs. Failures are report
entries, never exceptions.
"""

import logging
import math

import numpy as np
from scipy.integrate import quad

from app.config import settings
from app.core.clf import (
    c_q,
    f_nom_kernel,
    lyapunov_integral,
    lyapunov_kernel,
    margin_kernel,
    p_det_closed_form,
    p_entries,
    q_density,
    sinc_kernel,
    w_dot_nominal_kernel,
    w_kernel,
)
from app.core.qp import clf_only, solve_active_set, solve_closed_form
from app.models.enums import QpRegion
from app.schemas.controller import Gains, SymMatrix2
from app.schemas.qp import ConstraintTerms, QpParams
from app.schemas.verification import CheckResult, VerificationReport
from app.services.simulation_service import batch_certificates, simulate_nominal_closed_loop

logger = logging.getLogger(__name__)

LYAPUNOV_EQ_TOL = 1e-12
DET_TOL = 1e-12
W1_IDENTITY_TOL = 1e-10
W_DOT_SLACK = 1e-9
SINC_SLACK = 1e-12
GRADIENT_REL_TOL = 1e-6
FD_STEP = 1e-6
QUADRATURE_REL_TOL = 1e-9
DECREASE_SLACK = 1e-12
DECAY_REL_TOL = 1e-6
ORACLE_TOL = 1e-8
F2_TOL = 1e-10
CONTINUITY_FACTOR = 1.3


def _check(name: str, worst: float, tol: float, samples: int, ok: bool, detail: str = ""):
    result = CheckResult(
        name=name, passed=bool(ok), worst=float(worst), tolerance=tol, samples=samples,
        detail=detail,
    )
    level = logging.INFO if result.passed else logging.WARNING
    logger.log(
        level, f"check {name}: passed={result.passed} worst={result.worst:.3e} tol={tol:.1e}"
    )
    return result


# --- CLF suite ---


def _lyapunov_residual(k_rho, k_alpha, lam, p11, p12, p22) -> np.ndarray:
    """Entrywise max |A^T P + P A + I| for stacked gain triples."""
    n = np.size(k_rho)
    a = np.zeros((n, 2, 2))
    a[:, 0, 0] = -np.asarray(k_alpha)
    a[:, 0, 1] = -np.asarray(k_rho) * lam
    a[:, 1, 0] = k_rho
    p = np.empty((n, 2, 2))
    p[:, 0, 0] = p11
    p[:, 0, 1] = p12
    p[:, 1, 0] = p12
    p[:, 1, 1] = p22
    res = np.swapaxes(a, 1, 2) @ p + p @ a + np.eye(2)
    return np.max(np.abs(res), axis=(1, 2))


def _random_gain_triples(rng: np.random.Generator, n: int):
    k_rho = rng.uniform(0.1, 10.0, n)
    k_alpha = rng.uniform(0.1, 10.0, n)
    lam = rng.uniform(1.0, 10.0, n)
    return k_rho, k_alpha, lam


def _random_poses(rng: np.random.Generator, n: int, rho_max: float = 5.0, half: float = 5.0):
    rho = rho_max * (1.0 - rng.random(n))  # (0, rho_max]
    alpha = rng.uniform(-half, half, n)
    psi = rng.uniform(-half, half, n)
    return rho, alpha, psi


def check_lyapunov_equation(
    gains: Gains, rng: np.random.Generator, p_override: SymMatrix2 | None = None
) -> CheckResult:
    k_rho, k_alpha, lam = _random_gain_triples(rng, 100)
    k_rho = np.append(k_rho, gains.k_rho)
    k_alpha = np.append(k_alpha, gains.k_alpha)
    lam = np.append(lam, gains.lam)
    p11, p12, p22 = p_entries(k_rho, k_alpha, lam)
    if p_override is not None:
        p11[-1], p12[-1], p22[-1] = p_override.p11, p_override.p12, p_override.p22
    res = _lyapunov_residual(k_rho, k_alpha, lam, p11, p12, p22)
    worst = float(np.max(res))
    return _check("lyapunov_equation", worst, LYAPUNOV_EQ_TOL, res.size, worst <= LYAPUNOV_EQ_TOL)


def check_det_closed_form(rng: np.random.Generator) -> CheckResult:
    k_rho, k_alpha, lam = _random_gain_triples(rng, 100)
    p11, p12, p22 = p_entries(k_rho, k_alpha, lam)
    det = p11 * p22 - p12 * p12
    closed = p_det_closed_form(k_rho, k_alpha, lam)
    # Relative to max(1, det) since det reaches the hundreds for small gains
    err = np.abs(det - closed) / np.maximum(1.0, np.abs(closed))
    worst = float(np.max(err))
    ok = worst <= DET_TOL and bool(np.all(det > 0.0))
    return _check("det_closed_form", worst, DET_TOL, det.size, ok)


def check_positive_definite(gains: Gains, rng: np.random.Generator, n: int) -> CheckResult:
    x = rng.uniform(-10.0, 10.0, (5, n))
    x[0] = np.abs(x[0])
    x[:, x[0] == 0.0] = 1.0
    _, _, v, _ = lyapunov_kernel(*x, gains)
    _, _, v0, g0 = lyapunov_kernel(0.0, 0.0, 0.0, 0.0, 0.0, gains)
    worst = float(np.min(v))
    ok = worst > 0.0 and float(v0) == 0.0 and all(float(g) == 0.0 for g in g0)
    return _check("positive_definite", worst, 0.0, n, ok, "min V over nonzero samples")


def check_w1_identity(gains: Gains, rng: np.random.Generator, n: int) -> CheckResult:
    rho, alpha, psi = _random_poses(rng, n)
    f_rho, f_alpha, f_psi = f_nom_kernel(rho, alpha, psi, gains)
    lhs = rho * f_rho + alpha * f_alpha + gains.lam * psi * f_psi
    rhs = -gains.k_rho * np.cos(alpha) ** 2 * rho**2 - gains.k_alpha * alpha**2
    worst = float(np.max(np.abs(lhs - rhs)))
    return _check("w1_identity", worst, W1_IDENTITY_TOL, n, worst <= W1_IDENTITY_TOL)


def check_w_dot_bound(gains: Gains, rng: np.random.Generator, n: int) -> CheckResult:
    rho, alpha, psi = _random_poses(rng, n)
    w_dot = w_dot_nominal_kernel(rho, alpha, psi, gains)
    bound = -0.5 * (alpha**2 + psi**2) - gains.k_rho * np.cos(alpha) ** 2 * rho**2
    # Slack grows with |W'| so rounding of the large c_Q terms is not mistaken for a violation
    slack = W_DOT_SLACK + 1e-14 * np.abs(w_dot)
    excess = w_dot - bound
    worst = float(np.max(excess))
    return _check("w_dot_bound", worst, W_DOT_SLACK, n, bool(np.all(excess <= slack)))


def check_sinc_bound(rng: np.random.Generator, n: int) -> CheckResult:
    s = rng.uniform(-10.0, 10.0, n)
    sinc2, _ = sinc_kernel(2.0 * s)
    excess = np.abs(sinc2 - 1.0) - (2.0 / math.pi) * np.abs(s)
    worst = float(np.max(excess))
    return _check("sinc_bound", worst, SINC_SLACK, n, worst <= SINC_SLACK)


def _random_states(rng: np.random.Generator, n: int):
    rho = rng.uniform(0.1, 5.0, n)
    alpha = rng.uniform(-3.0, 3.0, n)
    psi = rng.uniform(-3.0, 3.0, n)
    z = rng.uniform(-3.0, 3.0, n)
    omega_err = rng.uniform(-3.0, 3.0, n)
    return np.stack([rho, alpha, psi, z, omega_err])


def check_gradient(gains: Gains, rng: np.random.Generator, n: int) -> CheckResult:
    x = _random_states(rng, n)
    _, _, _, grad = lyapunov_kernel(*x, gains)
    grad = np.stack(grad)
    fd = np.empty_like(grad)
    for i in range(5):
        step = np.zeros((5, 1))
        step[i] = FD_STEP
        _, _, v_plus, _ = lyapunov_kernel(*(x + step), gains)
        _, _, v_minus, _ = lyapunov_kernel(*(x - step), gains)
        fd[i] = (v_plus - v_minus) / (2.0 * FD_STEP)
    # Relative error with a unit floor on the gradient norm
    err = np.max(np.abs(fd - grad), axis=0) / np.maximum(1.0, np.max(np.abs(grad), axis=0))
    worst = float(np.max(err))
    return _check("gradient", worst, GRADIENT_REL_TOL, n, worst <= GRADIENT_REL_TOL)


def check_ray_monotonicity(gains: Gains, rng: np.random.Generator) -> CheckResult:
    directions = _random_states(rng, 100)
    directions /= np.linalg.norm(directions, axis=0)
    ts = np.linspace(0.0, 10.0, 201)
    scaled = directions[:, :, None] * ts[None, None, :]
    _, _, v, _ = lyapunov_kernel(*scaled, gains)
    worst = float(np.min(np.diff(v, axis=1)))
    return _check("ray_monotonicity", worst, 0.0, 100, worst > 0.0, "min V step along rays")


def check_margin_nonnegative(gains: Gains, rng: np.random.Generator, n: int) -> CheckResult:
    x = _random_states(rng, n)
    sigma = margin_kernel(*x, gains)
    worst = float(np.min(sigma))
    return _check("margin_nonnegative", worst, 1e-12, n, worst >= -1e-12)


def check_integral_closed_forms(gains: Gains, rng: np.random.Generator) -> CheckResult:
    rho, alpha, psi = _random_poses(rng, 100, rho_max=3.0, half=3.0)
    parts = w_kernel(rho, alpha, psi, gains)
    coef = c_q(gains)
    worst = 0.0
    for w1, w in zip(parts.w1, parts.w):
        q_int, _ = quad(lambda level: float(q_density(level, gains)), 0.0, float(w1))
        worst = max(worst, abs(q_int - coef * w1 * w1) / max(1.0, q_int))
        v_int, _ = quad(lambda s: -math.expm1(-s), 0.0, math.log1p(float(w)))
        closed = float(lyapunov_integral(w))
        worst = max(worst, abs(v_int - closed) / max(1.0, v_int))
    ok = worst <= QUADRATURE_REL_TOL
    return _check("integral_closed_forms", worst, QUADRATURE_REL_TOL, 100, ok)


def _rest_starts(rng: np.random.Generator, n: int) -> np.ndarray:
    rho0 = rng.uniform(0.5, 5.0, n)
    bearing = rng.uniform(-math.pi, math.pi, n)
    theta = rng.uniform(-math.pi, math.pi, n)
    zeros = np.zeros(n)
    return np.stack([rho0 * np.cos(bearing), rho0 * np.sin(bearing), theta, zeros, zeros], axis=1)


def check_nominal_decrease(
    gains: Gains,
    rng: np.random.Generator,
    n_trajectories: int = 100,
    t_end: float | None = None,
) -> tuple[CheckResult, CheckResult]:
    """V decreases along nominal closed-loop trajectories; z and omega_err decay exponentially.

    Each trajectory runs until rho < sim_rho_stop or the sim_t_max horizon.
    """
    t_end = settings.sim_t_max if t_end is None else t_end
    batch = simulate_nominal_closed_loop(
        gains, _rest_starts(rng, n_trajectories), 1e-3, t_end, rho_stop=settings.sim_rho_stop
    )
    z, omega_err, v = batch_certificates(batch, gains)
    worst_step = float(np.max(np.diff(v, axis=0)))
    decrease = _check(
        "nominal_decrease", worst_step, DECREASE_SLACK, n_trajectories,
        worst_step < DECREASE_SLACK, "max V step",
    )

    k_one = int(round(1.0 / 1e-3))
    errs = []
    for series, rate in ((z, gains.k_z), (omega_err, gains.k_omega)):
        expected = series[0] * math.exp(-rate * batch.t[k_one])
        mask = np.abs(series[0]) > 1e-2
        errs.append(np.abs(series[k_one][mask] - expected[mask]) / np.abs(expected[mask]))
    rel = np.concatenate(errs)
    worst_decay = float(np.max(rel)) if rel.size else 0.0
    decay = _check(
        "velocity_error_decay", worst_decay, DECAY_REL_TOL, rel.size, worst_decay <= DECAY_REL_TOL
    )
    return decrease, decay


def verify_clf(
    gains: Gains,
    n_samples: int,
    seed: int,
    p_override: SymMatrix2 | None = None,
    n_trajectories: int = 100,
) -> VerificationReport:
    """Run the certificate property suite.

    `p_override` replaces the closed-form P of `gains` in the Lyapunov-equation check,
    which lets a deliberately wrong matrix be shown to fail.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    logger.info(f"Verifying CLF properties: samples={n_samples} seed={seed}")
    checks = [
        check_lyapunov_equation(gains, rng, p_override),
        check_det_closed_form(rng),
        check_positive_definite(gains, rng, n_samples),
        check_w1_identity(gains, rng, min(n_samples, 10_000)),
        check_w_dot_bound(gains, rng, n_samples),
        check_sinc_bound(rng, n_samples),
        check_gradient(gains, rng, min(n_samples, 1_000)),
        check_ray_monotonicity(gains, rng),
        check_margin_nonnegative(gains, rng, n_samples),
        check_integral_closed_forms(gains, rng),
    ]
    if n_trajectories > 0:
        checks.extend(check_nominal_decrease(gains, rng, n_trajectories))
    return VerificationReport(suite="clf", seed=seed, checks=checks)


# --- QP suite ---


def _random_vectors(rng: np.random.Generator, n: int, lo: float, hi: float) -> np.ndarray:
    angle = rng.uniform(-math.pi, math.pi, n)
    norm = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    return np.stack([norm * np.cos(angle), norm * np.sin(angle)], axis=1)


def _random_params(rng: np.random.Generator) -> QpParams:
    m = float(rng.uniform(1.0, 10.0))
    if rng.random() < 0.5:
        return QpParams.stability(m)
    return QpParams(gamma=float(rng.uniform(1.0, 5.0)), m_weight=m)


def _deviation(u, ref) -> float:
    scale = max(1.0, math.hypot(ref[0], ref[1]))
    return math.hypot(u[0] - ref[0], u[1] - ref[1]) / scale


def _oracle_agreement(
    name: str, rng: np.random.Generator, n: int, b1s: np.ndarray, b2s: np.ndarray
) -> tuple[CheckResult, float]:
    a = rng.uniform(-10.0, 10.0, (n, 2))
    worst_dev = 0.0
    worst_f2 = -math.inf
    for i in range(n):
        p = _random_params(rng)
        t = ConstraintTerms.build(a[i, 0], b1s[i], a[i, 1], b2s[i], p.gamma)
        sol = solve_closed_form(t, p)
        ref = solve_active_set(t.clf_row(), [t.cbf_row()], p)
        worst_dev = max(worst_dev, _deviation(sol.u, ref.u))
        scale = max(1.0, abs(t.a2), math.hypot(*t.b2) * math.hypot(*sol.u))
        worst_f2 = max(worst_f2, sol.f2_residual / scale)
    return _check(name, worst_dev, ORACLE_TOL, n, worst_dev <= ORACLE_TOL), worst_f2


def check_at_rest(rng: np.random.Generator, n: int) -> CheckResult:
    a1 = rng.uniform(-10.0, 10.0, n)
    a2 = -rng.uniform(0.0, 10.0, n)
    b1s = _random_vectors(rng, n, 1e-3, 10.0)
    worst = 0.0
    ok = True
    for i in range(n):
        p = _random_params(rng)
        t = ConstraintTerms.build(a1[i], b1s[i], a2[i], (0.0, 0.0), p.gamma)
        sol = solve_closed_form(t, p)
        ok = ok and sol.region is QpRegion.DEGENERATE
        worst = max(worst, _deviation(sol.u, clf_only(t.a1, t.b1, p)))
    return _check("at_rest", worst, ORACLE_TOL, n, ok and worst <= ORACLE_TOL)


def _max_jump(t0: np.ndarray, d: np.ndarray, p: QpParams, step: float) -> float:
    """Largest |u(s + step) - u(s)| for terms t0 + s * d, s in [0, 1]."""
    n = int(round(1.0 / step))
    prev = None
    jump = 0.0
    for k in range(n + 1):
        c = t0 + (k * step) * d
        t = ConstraintTerms.build(c[0], c[1:3], c[3], c[4:6], p.gamma)
        u = solve_closed_form(t, p).u
        if prev is not None:
            jump = max(jump, math.hypot(u[0] - prev[0], u[1] - prev[1]))
        prev = u
    return jump


def check_continuity(rng: np.random.Generator, n_segments: int, step: float = 1e-3) -> CheckResult:
    """Halving the walk step along a path of constraint data halves the largest jump of u."""
    worst = 0.0
    ok = True
    checked = 0
    for _ in range(n_segments):
        p = _random_params(rng)
        b1 = _random_vectors(rng, 1, 0.5, 2.0)[0]
        b2 = _random_vectors(rng, 1, 0.5, 2.0)[0]
        t0 = np.array([rng.uniform(-10, 10), *b1, rng.uniform(-10, 10), *b2])
        d = np.array([rng.uniform(-20, 20), *rng.uniform(-0.1, 0.1, 2),
                      rng.uniform(-20, 20), *rng.uniform(-0.1, 0.1, 2)])
        coarse = _max_jump(t0, d, p, step)
        fine = _max_jump(t0, d, p, step / 2.0)
        if coarse < 1e-12:
            continue
        checked += 1
        ratio = coarse / fine
        deviation = max(ratio / 2.0, 2.0 / ratio)
        worst = max(worst, deviation)
        ok = ok and deviation <= CONTINUITY_FACTOR
    return _check(
        "continuity", worst, CONTINUITY_FACTOR, checked, ok, "worst jump-ratio factor vs 2"
    )


def verify_qp(n_samples: int, seed: int, n_segments: int = 100) -> VerificationReport:
    """Closed form against the active-set oracle on random, parallel and at-rest draws."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    logger.info(f"Verifying QP law: samples={n_samples} seed={seed}")

    general, worst_f2 = _oracle_agreement(
        "oracle_general", rng, n_samples,
        _random_vectors(rng, n_samples, 1e-3, 10.0), _random_vectors(rng, n_samples, 1e-3, 10.0),
    )
    n_small = max(1, n_samples // 10)
    b1s = _random_vectors(rng, n_small, 1e-3, 10.0)
    factor = rng.choice([-1.0, 1.0], n_small) * np.exp(rng.uniform(-3.0, 3.0, n_small))
    parallel, worst_f2_par = _oracle_agreement(
        "oracle_parallel", rng, n_small, b1s, b1s * factor[:, None]
    )
    worst_f2 = max(worst_f2, worst_f2_par)
    f2 = _check("cbf_residual", worst_f2, F2_TOL, n_samples + n_small, worst_f2 <= F2_TOL)
    checks = [general, parallel, f2, check_at_rest(rng, n_small)]
    if n_segments > 0:
        checks.append(check_continuity(rng, n_segments))
    return VerificationReport(suite="qp", seed=seed, checks=checks)

