"""Tests for the closed-form gamma-m QP, the CLF-only law and the active-set oracle."""

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.errors import DegenerateQp
from app.core.qp import (
    active_set_oracle,
    clf_only,
    gamma_f,
    solve_active_set,
    solve_closed_form,
    solve_multi,
)
from app.models.enums import QpRegion
from app.schemas.qp import ConstraintRow, ConstraintTerms, QpParams


def _terms(a1, b1, a2, b2, gamma=2.0) -> ConstraintTerms:
    return ConstraintTerms.build(a1, b1, a2, b2, gamma)


def test_qp_params_stability_mode():
    p = QpParams.stability(1.0)
    assert p.gamma == 2.0
    assert p.is_stability_mode
    assert QpParams.stability(3.0).gamma == pytest.approx(4.0 / 3.0)
    assert not QpParams(gamma=3.0, m_weight=1.0).is_stability_mode
    with pytest.raises(ValidationError):
        QpParams(gamma=0.5)
    with pytest.raises(ValidationError):
        QpParams(gamma=2.0, m_weight=0.5)


def test_gamma_f_scales_only_positive_drift():
    assert gamma_f(1.5, 2.0) == 3.0
    assert gamma_f(-1.5, 2.0) == -1.5
    assert gamma_f(0.0, 2.0) == 0.0


def test_both_inactive_example(qp_params):
    sol = solve_closed_form(_terms(-1, (1, 0), -1, (0, 1)), qp_params)
    assert sol.u == (0.0, 0.0)
    assert sol.region is QpRegion.BOTH_INACTIVE


def test_clf_active_example(qp_params):
    sol = solve_closed_form(_terms(1, (1, 0), -100, (0, 1)), qp_params)
    assert sol.u == pytest.approx((-1.0, 0.0))
    assert sol.region is QpRegion.CLF_ACTIVE
    # In stability mode the CLF-active law is -a1 b1 / |b1|^2
    assert sol.f1_residual == pytest.approx(0.0, abs=1e-15)


def test_cbf_active_example(qp_params):
    sol = solve_closed_form(_terms(-5, (1, 0), 1, (0, 1)), qp_params)
    assert sol.u == pytest.approx((0.0, -1.0))
    assert sol.region is QpRegion.CBF_ACTIVE
    assert sol.f2_residual == pytest.approx(0.0, abs=1e-15)


def test_both_active_example(qp_params):
    t = _terms(1, (1, 0), 1, (1, 0))
    sol = solve_closed_form(t, qp_params)
    assert sol.u == pytest.approx((-1.0, 0.0))
    assert sol.region is QpRegion.BOTH_ACTIVE
    assert sol.f2_residual == 0.0

    oracle = solve_active_set(t.clf_row(), [t.cbf_row()], qp_params)
    assert oracle.u == pytest.approx((-1.0, 0.0))
    assert oracle.multipliers[1] >= 0.0
    assert np.allclose(active_set_oracle(t.clf_row(), [t.cbf_row()], qp_params), [-1.0, 0.0])


def test_clf_only_examples(qp_params):
    assert clf_only(-3.0, (4.0, -7.0), qp_params) == (0.0, 0.0)
    assert clf_only(2.0, (0.0, 1.0), qp_params) == pytest.approx((0.0, -2.0))
    assert clf_only(-1.0, (0.0, 0.0), qp_params) == (0.0, 0.0)
    with pytest.raises(DegenerateQp):
        clf_only(1.0, (0.0, 0.0), qp_params)


def test_degenerate_rows_raise(qp_params):
    with pytest.raises(DegenerateQp):
        solve_closed_form(_terms(0.5, (0, 0), -1, (0, 1)), qp_params)
    with pytest.raises(DegenerateQp):
        solve_closed_form(_terms(-1, (1, 0), 0.5, (0, 0)), qp_params)


def test_dropped_barrier_row_matches_clf_only(qp_params):
    rng = np.random.default_rng(1)
    for _ in range(200):
        a1 = rng.uniform(-5, 5)
        b1 = tuple(rng.uniform(-3, 3, 2))
        sol = solve_closed_form(_terms(a1, b1, -rng.uniform(0, 5), (0.0, 0.0)), qp_params)
        assert sol.region is QpRegion.DEGENERATE
        assert sol.u == pytest.approx(clf_only(a1, b1, qp_params), abs=1e-12)


def test_dropped_clf_row_keeps_barrier(qp_params):
    sol = solve_closed_form(_terms(-1.0, (0, 0), 2.0, (0, 2)), qp_params)
    assert sol.region is QpRegion.DEGENERATE
    assert sol.u == pytest.approx((0.0, -1.0))
    assert sol.f2_residual == pytest.approx(0.0, abs=1e-15)


def test_closed_form_agrees_with_oracle():
    rng = np.random.default_rng(42)
    for _ in range(2000):
        m = rng.uniform(1, 10)
        p = QpParams(gamma=rng.uniform(1, 5), m_weight=m)
        t = _terms(
            rng.uniform(-10, 10),
            tuple(rng.uniform(-5, 5, 2)),
            rng.uniform(-10, 10),
            tuple(rng.uniform(-5, 5, 2)),
            p.gamma,
        )
        closed = solve_closed_form(t, p)
        oracle = solve_active_set(t.clf_row(), [t.cbf_row()], p)
        scale = 1.0 + max(abs(c) for c in oracle.u)
        assert np.max(np.abs(np.subtract(closed.u, oracle.u))) <= 1e-8 * scale
        # The barrier row is a hard constraint
        bu = float(np.hypot(*t.b2)) * float(np.hypot(*closed.u))
        assert closed.f2_residual <= 1e-10 * (1.0 + abs(t.a2) + bu)


def test_solution_is_continuous_in_the_data(qp_params):
    # Walk straight across every region boundary; jumps shrink with the step
    start = np.array([-3.0, 1.0, 0.2, -2.0, 0.5, 1.5])
    end = np.array([4.0, -0.5, 0.9, 3.0, 1.2, -0.7])
    jumps = []
    for step in (1e-3, 5e-4):
        ss = np.arange(0.0, 1.0 + step, step)
        us = []
        for s in ss:
            a1, b10, b11, a2, b20, b21 = (1 - s) * start + s * end
            us.append(solve_closed_form(_terms(a1, (b10, b11), a2, (b20, b21)), qp_params).u)
        jumps.append(np.max(np.linalg.norm(np.diff(np.array(us), axis=0), axis=1)))
    assert jumps[0] / jumps[1] == pytest.approx(2.0, rel=0.3)


def test_solve_multi_with_one_row_uses_closed_form(qp_params):
    t = _terms(1, (1, 0), -100, (0, 1))
    assert solve_multi(t.clf_row(), [t.cbf_row()], qp_params) == solve_closed_form(t, qp_params)


def test_solve_multi_without_barrier_rows(qp_params):
    sol = solve_multi(ConstraintRow(a=2.0, b=(0.0, 1.0)), [], qp_params)
    assert sol.u == pytest.approx((0.0, -2.0))
    assert sol.region is QpRegion.CLF_ACTIVE
    assert sol.f2_residual == -np.inf

    idle = solve_multi(ConstraintRow(a=-2.0, b=(0.0, 1.0)), [], qp_params)
    assert idle.u == (0.0, 0.0)
    assert idle.region is QpRegion.BOTH_INACTIVE


def test_solve_multi_ignores_slack_barrier_rows(qp_params):
    t = _terms(0.7, (1.0, -0.5), 1.2, (0.4, 1.1))
    far = ConstraintRow(a=-100.0, b=(0.3, 0.2))
    single = solve_closed_form(t, qp_params)
    multi = solve_multi(t.clf_row(), [t.cbf_row(), far], qp_params)
    assert multi.u == pytest.approx(single.u, abs=1e-9)
    assert multi.region is single.region


def test_solve_multi_honours_every_barrier_row(qp_params):
    clf = ConstraintRow(a=-1.0, b=(1.0, 0.0))
    rows = [ConstraintRow(a=1.0, b=(1.0, 0.0)), ConstraintRow(a=1.0, b=(0.0, 1.0))]
    sol = solve_multi(clf, rows, qp_params)
    assert sol.u == pytest.approx((-1.0, -1.0))
    assert sol.f2_residual == pytest.approx(0.0, abs=1e-12)
    assert sol.region is QpRegion.CBF_ACTIVE
