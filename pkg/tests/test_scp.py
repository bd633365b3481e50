import json

import numpy as np
import pytest

from slewopt import scp
from slewopt.dynamics import IQ, IR, IW, NU, NX, SatelliteParams, replay
from slewopt.quaternion import IDENTITY, angle_between, axis_angle_to_quaternion
from slewopt.transcription import DecisionStack, PointingScheduleSpec, ScalingMap

P = SatelliteParams()
Q60 = axis_angle_to_quaternion([1, 0, 0], np.radians(60))


@pytest.fixture(scope="module")
def slew60():
    return scp.solve_min_time(IDENTITY, Q60, P)


def test_initial_guess_endpoints_and_midpoint():
    q90 = axis_angle_to_quaternion([0, 0, 1], np.pi / 2)
    g = scp.initial_guess(IDENTITY, q90, 3, 10.0)
    np.testing.assert_allclose(g.X[0, IQ], IDENTITY)
    np.testing.assert_allclose(g.X[-1, IQ], q90, atol=1e-15)
    np.testing.assert_allclose(g.X[1, IQ], axis_angle_to_quaternion([0, 0, 1], np.pi / 4),
                               atol=1e-15)
    assert not g.X[:, 4:].any() and not g.U.any() and g.tf == 10.0


def test_schedule_initial_guess_holds_after_last_target():
    qa = axis_angle_to_quaternion([0, 1, 0], 0.4)
    spec = PointingScheduleSpec([4], [qa], [], [], 10.0)
    g = scp.schedule_initial_guess(IDENTITY, spec, 9)
    np.testing.assert_allclose(g.X[4:, IQ], np.tile(qa, (5, 1)), atol=1e-15)
    assert angle_between(g.X[2, IQ], IDENTITY) == pytest.approx(0.2, abs=1e-12)


def test_min_time_guess_is_conservative():
    # 20% above the x-axis bang-bang time because x is not the weakest axis
    assert scp.min_time_guess(IDENTITY, Q60, P) > 1.2 * 2 * np.sqrt(np.pi / 3 * 8.5 / 0.1632)


def test_penalty_oracles():
    cfg = scp.ScpConfig(K=5)
    smap = ScalingMap.identity()
    prev = DecisionStack(np.zeros((5, NX)), np.zeros((5, NU)), 1.0)
    cur = prev.copy()
    cur.V = np.zeros((4, NX))
    cur.V[0, 0] = 1e-3
    pen = scp.evaluate_penalties(cur, prev, cfg, smap)
    assert pen["J_vc"] == pytest.approx(100.0)
    assert pen["J_tr"] == 0.0
    cur.X[2, 5] = 0.25
    assert scp.evaluate_penalties(cur, prev, cfg, smap)["J_tr"] == pytest.approx(0.025)
    # t_f is carried on every node, so a unit change counts once per node
    cur.tf = 2.0
    assert scp.evaluate_penalties(cur, prev, cfg, smap)["J_tr"] == pytest.approx(
        0.1 * (4 + np.hypot(0.25, 1.0)))
    assert scp.evaluate_penalties(cur, prev, cfg, smap, include_tf=False)["J_tr"] == \
        pytest.approx(0.025)
    with pytest.raises(ValueError):
        scp.evaluate_penalties(DecisionStack(np.zeros((4, NX)), np.zeros((4, NU)), 1.0),
                               prev, cfg, smap)


def test_config_validation_and_round_trip():
    cfg = scp.ScpConfig.multi_target(K=11)
    assert cfg.t_f == 600.0 and cfg.eps_vc == 1e-3
    assert scp.ScpConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match="unknown SCP config keys: bogus"):
        scp.ScpConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        scp.ScpConfig(K=1)
    with pytest.raises(ValueError):
        scp.ScpConfig(w_vc=0.0)
    with pytest.raises(ValueError):
        scp.run("other", {}, cfg, P)


def test_sixty_degree_slew_converges(slew60):
    res = slew60
    assert res.converged and res.status == "converged"
    assert res.iterations <= 20
    assert res.J_vc <= 1e-5 and res.J_tr <= 1e-5
    assert res.tf == pytest.approx(2 * np.sqrt(np.pi / 3 * 8.5 / 0.1632), rel=0.02)
    X, U = res.stack.X, res.stack.U
    np.testing.assert_allclose(X[0], np.r_[IDENTITY, np.zeros(7)], atol=1e-8)
    assert angle_between(X[-1, IQ], Q60) < 1e-6
    assert np.abs(X[-1, IW]).max() < 1e-8
    assert np.abs(U).max() <= P.u_max * (1 + 1e-6)
    assert np.abs(X[:, IR]).max() <= P.r_max * (1 + 1e-6)


def test_sixty_degree_slew_replays(slew60):
    st = slew60.stack
    _, X, _ = replay(st.X[0], st.times, st.U, P)
    assert np.degrees(angle_between(X[-1, IQ], Q60)) < 0.1
    assert np.abs(X[-1, IW]).max() < 1e-3


def test_history_json(slew60):
    h = json.loads(slew60.history_json())
    assert h["converged"] and len(h["history"]) == slew60.iterations
    objectives = [row["objective"] for row in h["history"]]
    assert all(np.isfinite(objectives))


def test_iteration_cap_is_reported():
    res = scp.solve_min_time(IDENTITY, Q60, P, scp.ScpConfig(K=15, N_max=1))
    assert not res.converged and res.status == "max_iters"
    assert res.iterations == 1 and len(res.history) == 1
