"""The gamma-m QP

    min 1/2 (u^T u + m delta^T delta)
    s.t. gamma_f(a1) + b1 . (u + delta) <= 0      (CLF, softened by delta)
         a2 + b2 . u <= 0                          (CBF, hard)

solved in closed form over the four KKT regions, plus an active-set enumeration
oracle that also handles several CBF rows.
"""

import logging
import math
from itertools import combinations
from typing import Sequence

import numpy as np

from app.core.errors import DegenerateQp, NoFeasibleActiveSet
from app.models.enums import QpRegion
from app.schemas.qp import ConstraintRow, ConstraintTerms, OracleSolution, QpParams, QpSolution

logger = logging.getLogger(__name__)

# Rows whose gradient norm falls below this are treated as input-independent
B_NORM_GUARD = 1e-12


def gamma_f(s: float, gamma: float) -> float:
    return gamma * s if s >= 0.0 else s


def _dot(a, b) -> float:
    return a[0] * b[0] + a[1] * b[1]


def classify_region(t: ConstraintTerms, p: QpParams) -> QpRegion:
    """Region of the closed-form law. Both b1 and b2 must be nonzero."""
    m = p.m_weight
    s = _dot(t.b1, t.b2)
    n1 = _dot(t.b1, t.b1)
    n2 = _dot(t.b2, t.b2)
    if t.a1 < 0.0 and t.a2 < 0.0:
        return QpRegion.BOTH_INACTIVE
    if t.a1 >= 0.0 and t.a2 < m / (m + 1.0) * s / n1 * t.a1_bar:
        return QpRegion.CLF_ACTIVE
    if t.a2 >= 0.0 and t.a1_bar < s / n2 * t.a2:
        return QpRegion.CBF_ACTIVE
    return QpRegion.BOTH_ACTIVE


def _clf_multiplier(a1_bar: float, n1: float, m: float) -> float:
    return m / (m + 1.0) * a1_bar / n1


def _solution(
    t: ConstraintTerms, p: QpParams, u: tuple[float, float], lam1: float, region: QpRegion
) -> QpSolution:
    n1 = _dot(t.b1, t.b1)
    # delta = -lam1 * b1 / m, so b1 . delta = -lam1 |b1|^2 / m
    f1 = t.a1_bar + _dot(t.b1, u) - lam1 * n1 / p.m_weight
    f2 = t.a2 + _dot(t.b2, u)
    return QpSolution(u=u, region=region, f1_residual=f1, f2_residual=f2)


def solve_closed_form(t: ConstraintTerms, p: QpParams) -> QpSolution:
    m = p.m_weight
    b1_norm = math.hypot(*t.b1)
    b2_norm = math.hypot(*t.b2)
    if b1_norm < B_NORM_GUARD and t.a1 >= 0.0:
        raise DegenerateQp(f"CLF row has b1 ~ 0 with a1={t.a1!r} >= 0", terms=t)
    if b2_norm < B_NORM_GUARD and t.a2 > 0.0:
        raise DegenerateQp(f"CBF row has b2 ~ 0 with a2={t.a2!r} > 0", terms=t)

    drop_clf = b1_norm < B_NORM_GUARD
    drop_cbf = b2_norm < B_NORM_GUARD
    if drop_clf or drop_cbf:
        if drop_clf and drop_cbf:
            return _solution(t, p, (0.0, 0.0), 0.0, QpRegion.DEGENERATE)
        if drop_cbf:
            if t.a1 < 0.0:
                return _solution(t, p, (0.0, 0.0), 0.0, QpRegion.DEGENERATE)
            lam1 = _clf_multiplier(t.a1_bar, b1_norm**2, m)
            return _solution(
                t, p, (-lam1 * t.b1[0], -lam1 * t.b1[1]), lam1, QpRegion.DEGENERATE
            )
        if t.a2 < 0.0:
            return _solution(t, p, (0.0, 0.0), 0.0, QpRegion.DEGENERATE)
        lam2 = t.a2 / b2_norm**2
        return _solution(t, p, (-lam2 * t.b2[0], -lam2 * t.b2[1]), 0.0, QpRegion.DEGENERATE)

    region = classify_region(t, p)
    if region is QpRegion.BOTH_INACTIVE:
        return _solution(t, p, (0.0, 0.0), 0.0, region)
    if region is QpRegion.CLF_ACTIVE:
        lam1 = _clf_multiplier(t.a1_bar, b1_norm**2, m)
        return _solution(t, p, (-lam1 * t.b1[0], -lam1 * t.b1[1]), lam1, region)
    if region is QpRegion.CBF_ACTIVE:
        lam2 = t.a2 / b2_norm**2
        return _solution(t, p, (-lam2 * t.b2[0], -lam2 * t.b2[1]), 0.0, region)

    n1 = b1_norm**2
    n2 = b2_norm**2
    s = _dot(t.b1, t.b2)
    k = 1.0 + 1.0 / m
    denom = k * n1 * n2 - s * s
    mu1 = (n2 * t.a1_bar - s * t.a2) / denom
    mu2 = (-s * t.a1_bar + k * n1 * t.a2) / denom
    u = (-mu1 * t.b1[0] - mu2 * t.b2[0], -mu1 * t.b1[1] - mu2 * t.b2[1])
    return _solution(t, p, u, mu1, region)


def clf_only(a1: float, b1, p: QpParams) -> tuple[float, float]:
    """Pointwise min-norm law for the CLF row alone (no barrier)."""
    n1 = _dot(b1, b1)
    if math.sqrt(n1) < B_NORM_GUARD:
        if a1 >= 0.0:
            raise DegenerateQp(f"CLF row has b1 ~ 0 with a1={a1!r} >= 0")
        return 0.0, 0.0
    if a1 < 0.0:
        return 0.0, 0.0
    lam1 = _clf_multiplier(gamma_f(a1, p.gamma), n1, p.m_weight)
    return -lam1 * b1[0], -lam1 * b1[1]


def solve_active_set(
    clf_row: ConstraintRow,
    cbf_rows: Sequence[ConstraintRow],
    p: QpParams,
    tol: float = 1e-9,
) -> OracleSolution:
    """Enumerate every active subset of the 1 + k rows and keep the KKT point of least cost.

    Decision vector y = (u, delta) in R^4, cost 1/2 y^T H y with H = diag(1, 1, m, m).
    For an active set S the equality-constrained minimizer is
    lambda_S = (A_S H^-1 A_S^T)^-1 d_S, y = -H^-1 A_S^T lambda_S.
    """
    m = p.m_weight
    b1 = clf_row.b
    rows = [[b1[0], b1[1], b1[0], b1[1]]] + [[r.b[0], r.b[1], 0.0, 0.0] for r in cbf_rows]
    a = np.array(rows)
    d = np.array([gamma_f(clf_row.a, p.gamma)] + [r.a for r in cbf_rows])
    h_inv = np.array([1.0, 1.0, 1.0 / m, 1.0 / m])
    scale = 1.0 + float(np.max(np.abs(d)))
    n_rows = len(rows)

    best: OracleSolution | None = None
    for size in range(n_rows + 1):
        for active in combinations(range(n_rows), size):
            lam = np.zeros(n_rows)
            if active:
                idx = list(active)
                a_s = a[idx]
                gram = (a_s * h_inv) @ a_s.T
                try:
                    lam_s = np.linalg.solve(gram, d[idx])
                except np.linalg.LinAlgError:
                    continue
                lam[idx] = lam_s
                y = -h_inv * (a_s.T @ lam_s)
            else:
                y = np.zeros(4)
            if np.any(a @ y + d > tol * scale):
                continue
            if np.any(lam < -tol * max(1.0, float(np.max(np.abs(lam))))):
                continue
            objective = 0.5 * float(y[:2] @ y[:2] + m * (y[2:] @ y[2:]))
            if best is None or objective < best.objective:
                best = OracleSolution(
                    u=(float(y[0]), float(y[1])),
                    delta=(float(y[2]), float(y[3])),
                    multipliers=tuple(float(v) for v in lam),
                    active=tuple(active),
                    objective=objective,
                )
    if best is None:
        raise NoFeasibleActiveSet(f"no KKT point among {2**n_rows} active sets")
    logger.debug(f"Oracle active set {best.active}, delta={best.delta}")
    return best


def active_set_oracle(
    clf_row: ConstraintRow, cbf_rows: Sequence[ConstraintRow], p: QpParams
) -> np.ndarray:
    return np.array(solve_active_set(clf_row, cbf_rows, p).u)


def solve_multi(
    clf_row: ConstraintRow, cbf_rows: Sequence[ConstraintRow], p: QpParams
) -> QpSolution:
    """Closed form for exactly one barrier row, active-set enumeration otherwise."""
    if len(cbf_rows) == 1:
        terms = ConstraintTerms.build(
            clf_row.a, clf_row.b, cbf_rows[0].a, cbf_rows[0].b, p.gamma
        )
        return solve_closed_form(terms, p)

    a1_bar = gamma_f(clf_row.a, p.gamma)
    if not cbf_rows:
        u = clf_only(clf_row.a, clf_row.b, p)
        lam1 = 0.0 if clf_row.a < 0.0 else _clf_multiplier(
            a1_bar, _dot(clf_row.b, clf_row.b), p.m_weight
        )
        region = QpRegion.CLF_ACTIVE if lam1 > 0.0 else QpRegion.BOTH_INACTIVE
        f1 = a1_bar + _dot(clf_row.b, u) - lam1 * _dot(clf_row.b, clf_row.b) / p.m_weight
        return QpSolution(u=u, region=region, f1_residual=f1, f2_residual=-math.inf)

    sol = solve_active_set(clf_row, cbf_rows, p)
    clf_active = 0 in sol.active
    cbf_active = any(i > 0 for i in sol.active)
    region = {
        (False, False): QpRegion.BOTH_INACTIVE,
        (True, False): QpRegion.CLF_ACTIVE,
        (False, True): QpRegion.CBF_ACTIVE,
        (True, True): QpRegion.BOTH_ACTIVE,
    }[(clf_active, cbf_active)]
    f1 = a1_bar + _dot(clf_row.b, sol.u) + _dot(clf_row.b, sol.delta)
    f2 = max(r.a + _dot(r.b, sol.u) for r in cbf_rows)
    return QpSolution(u=sol.u, region=region, f1_residual=f1, f2_residual=f2)
