import json

import numpy as np
import pytest

from slewopt import geometry as geo
from slewopt.quaternion import angle_between, rotation_matrix

ORBIT = geo.CircularOrbit()
RNG = np.random.default_rng(5)


def lattice():
    # about 700 km ahead of the sub-satellite point at t = 0 on a near-polar orbit
    return (geo.target_lattice(5.0, -1.0, 3, 3, region="A")
            + geo.target_lattice(9.0, -1.5, 2, 3, region="B"))


def constant_slew(seconds):
    return lambda qa, qb: seconds


def test_period_and_radius():
    r = geo.R_EARTH + 710.0
    assert ORBIT.period == pytest.approx(2 * np.pi * np.sqrt(r ** 3 / geo.MU_EARTH), rel=1e-14)
    assert ORBIT.period == pytest.approx(5938.9, abs=0.5)
    with pytest.raises(ValueError):
        geo.CircularOrbit(altitude=-1.0)
    with pytest.raises(ValueError):
        geo.CircularOrbit.from_dict({"altitude": 700})
    assert geo.CircularOrbit.from_dict(ORBIT.to_dict()) == ORBIT


def test_propagation_is_circular():
    t = np.linspace(0.0, ORBIT.period, 500)
    r, v = geo.propagate(ORBIT, t)
    rn = np.linalg.norm(r, axis=1)
    assert np.abs(rn / ORBIT.radius - 1.0).max() < 1e-9
    assert np.abs(np.sum(r * v, axis=1)).max() < 1e-9 * ORBIT.radius * np.linalg.norm(v[0])
    np.testing.assert_allclose(r[-1], r[0], atol=1e-6)
    # angular momentum is inclined by the orbit inclination
    h = np.cross(r[0], v[0])
    assert np.degrees(np.arccos(h[2] / np.linalg.norm(h))) == pytest.approx(98.5)


def test_pointing_frame_is_proper_rotation():
    r, v = geo.propagate(ORBIT, 100.0)
    tgt = geo.target_eci(geo.GroundTarget("t", 3.0, 1.0), 100.0)
    C = geo.pointing_frame(r, v, tgt)
    np.testing.assert_allclose(C.T @ C, np.eye(3), atol=1e-14)
    assert np.linalg.det(C) == pytest.approx(1.0)
    los = (tgt - r) / np.linalg.norm(tgt - r)
    np.testing.assert_allclose(C[:, 2], los, atol=1e-14)
    assert C[:, 0] @ v > 0
    q = geo.pointing_quaternion(r, v, tgt)
    np.testing.assert_allclose(rotation_matrix(q), C, atol=1e-12)
    with pytest.raises(ValueError):
        geo.pointing_frame(r, v, r)
    with pytest.raises(ValueError):
        geo.pointing_frame(r, v, r + v)


def test_nadir_attitude_has_zero_off_nadir_angle():
    r, v = geo.propagate(ORBIT, 0.0)
    q = geo.nadir_quaternion(r, v)
    np.testing.assert_allclose(rotation_matrix(q)[:, 2], -r / np.linalg.norm(r), atol=1e-14)
    assert geo.off_nadir_angle(r, r * geo.R_EARTH / np.linalg.norm(r)) == pytest.approx(0.0)


def test_target_rotates_with_the_earth():
    tg = geo.GroundTarget("eq", 0.0, 0.0)
    np.testing.assert_allclose(geo.target_eci(tg, 0.0), [geo.R_EARTH, 0.0, 0.0])
    quarter = geo.target_eci(tg, geo.SIDEREAL_DAY / 4)
    np.testing.assert_allclose(quarter, [0.0, geo.R_EARTH, 0.0], atol=1e-9)
    assert geo.GroundTarget("w", 0.0, 190.0).lon == pytest.approx(-170.0)
    with pytest.raises(ValueError):
        geo.GroundTarget("bad", 91.0, 0.0)


def test_access_windows():
    targets = [geo.GroundTarget("near", 5.0, -1.0), geo.GroundTarget("antipode", 0.0, 180.0)]
    win = geo.access_windows(ORBIT, targets, 600.0)
    assert win["antipode"] == []
    (a, b), = win["near"]
    assert 0.0 <= a < b <= 600.0
    # inside the window the off-nadir angle respects the limit, just outside it does not
    r, _ = geo.propagate(ORBIT, np.array([a, b]))
    tg = geo.target_eci(targets[0], np.array([a, b]))
    assert np.all(np.degrees(geo.off_nadir_angle(r, tg)) <= 45.0)
    if b < 600.0:
        r1, _ = geo.propagate(ORBIT, b + 1.0)
        assert np.degrees(geo.off_nadir_angle(r1, geo.target_eci(targets[0], b + 1.0))) > 45.0
    with pytest.raises(ValueError):
        geo.access_windows(ORBIT, targets, 10.0, step=0.0)


def test_targets_csv_round_trip(tmp_path):
    targets = lattice()
    path = tmp_path / "targets.csv"
    geo.write_targets_csv(path, targets)
    assert geo.read_targets_csv(path) == targets
    path.write_text("id,lat_deg,lon_deg,region\nx,95,0,A\n")
    with pytest.raises(ValueError, match=":2:"):
        geo.read_targets_csv(path)
    path.write_text("id,lat\n")
    with pytest.raises(ValueError, match="header"):
        geo.read_targets_csv(path)


def test_lattice_spacing():
    targets = geo.target_lattice(20.0, 30.0, 2, 2, spacing_km=8.0)
    P = np.array([t.ecef() for t in targets])
    assert np.linalg.norm(P[0] - P[1]) == pytest.approx(8.0, rel=1e-3)
    assert np.linalg.norm(P[0] - P[2]) == pytest.approx(8.0, rel=1e-3)


def test_sweep_schedule_respects_slew_time_and_access():
    targets = lattice()
    sched, skips = geo.build_sweep_schedule(ORBIT, targets, constant_slew(9.5), 600.0)
    obs = sched.observations
    assert len(obs) + len(skips) == len(targets)
    assert geo.audit_schedule(sched, constant_slew(9.5)) == []
    gaps = np.diff([0.0] + [e.t for e in obs])
    assert gaps.min() >= 10.0
    win = geo.access_windows(ORBIT, targets, 600.0)
    for e in obs:
        assert any(a <= e.t <= b for a, b in win[e.target_id])
        assert not e.w.any()
    # regions are finished one at a time
    regions = [e.target_id[0] for e in obs]
    assert regions == sorted(regions, key=regions.index)
    # every observation has zero-rate neighbours
    ts = {e.t for e in sched.entries}
    for e in obs:
        assert e.t - 1.0 in ts and (e.t + 1.0 in ts or e.t == sched.t_f)
    assert sched.t_f == 600.0


def test_schedule_limits_and_skips():
    targets = lattice() + [geo.GroundTarget("far", -60.0, 120.0, "C")]
    sched, skips = geo.build_sweep_schedule(ORBIT, targets, constant_slew(5.0), 600.0,
                                            max_observations=4)
    assert len(sched.observations) == 4
    reasons = {s["target_id"]: s["reason"] for s in skips.skipped}
    assert reasons["far"] == "no access in horizon"
    assert sum(r == "observation limit reached" for r in reasons.values()) == len(targets) - 5
    with pytest.raises(ValueError):
        geo.build_sweep_schedule(ORBIT, targets[-1:], constant_slew(5.0), 600.0)


def test_audit_flags_short_gaps():
    targets = lattice()
    sched, _ = geo.build_sweep_schedule(ORBIT, targets, constant_slew(5.0), 600.0)
    bad = geo.audit_schedule(sched, constant_slew(50.0))
    assert bad and all(b["gap_s"] < b["required_s"] for b in bad)


def test_schedule_json_round_trip_and_spec():
    sched, _ = geo.build_sweep_schedule(ORBIT, lattice(), constant_slew(9.5), 120.0)
    back = geo.PointingSchedule.from_dict(json.loads(sched.dumps()))
    assert back.dumps() == sched.dumps()
    spec, K = back.to_spec()
    assert K == 121
    assert spec.q_nodes.tolist() == [int(e.t) for e in back.observations]
    for k, q in zip(spec.q_nodes, spec.q_des):
        assert angle_between(q, back.observations[list(spec.q_nodes).index(k)].q) < 1e-12
    with pytest.raises(ValueError):
        geo.PointingSchedule.from_dict({"entries": []})
    bad = json.loads(sched.dumps())
    bad["entries"][0]["q"] = [0, 0, 0, 2]
    with pytest.raises(ValueError, match="entry 0"):
        geo.PointingSchedule.from_dict(bad)
    with pytest.raises(ValueError):
        back.to_spec(t_f=10.5)


def test_attitude_step():
    from slewopt.quaternion import axis_angle_to_quaternion
    a = axis_angle_to_quaternion([0, 1, 0], 0.1)
    b = axis_angle_to_quaternion([0, 1, 0], 0.4)
    assert geo.attitude_step(a, b) == pytest.approx(np.degrees(0.3))
