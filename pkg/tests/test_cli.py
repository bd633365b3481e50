import json

import numpy as np
import pytest

from slewopt import cli
from slewopt.dynamics import read_trajectory_csv
from slewopt.geometry import target_lattice, write_targets_csv


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        run("slew", "--bogus")
    assert exc.value.code == cli.EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        run()
    assert exc.value.code == cli.EXIT_CONFIG


def test_zero_rotation_is_a_config_error(tmp_path, capsys):
    assert run("slew", "--angle-deg", 0, "--out", tmp_path / "o") == cli.EXIT_CONFIG
    assert "rotation" in capsys.readouterr().err


def test_missing_and_malformed_inputs(tmp_path, capsys):
    assert run("slew", "--angle-deg", 30, "--params", tmp_path / "nope.json",
               "--out", tmp_path / "o") == cli.EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text('{"u_max": 0.1,\n "Jr": }')
    assert run("slew", "--angle-deg", 30, "--params", bad, "--out", tmp_path / "o") == \
        cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 2" in err
    scp = tmp_path / "scp.json"
    scp.write_text('{"K": 10, "typo": 1}')
    assert run("slew", "--angle-deg", 30, "--scp", scp, "--out", tmp_path / "o") == \
        cli.EXIT_CONFIG
    assert "typo" in capsys.readouterr().err
    assert run("slew", "--angle-deg", 30, "--axis", "1,0", "--out", tmp_path / "o") == \
        cli.EXIT_CONFIG


def test_parsers():
    np.testing.assert_array_equal(cli.parse_vector("1, 2,3", 3, "--axis"), [1.0, 2.0, 3.0])
    with pytest.raises(cli.ConfigError, match="--axis"):
        cli.parse_vector("1,a,3", 3, "--axis")
    with pytest.raises(cli.ConfigError):
        cli.parse_quaternion("0,0,0,0", "--to-quat")
    np.testing.assert_allclose(cli.parse_quaternion("0,0,0,2", "--to-quat"), [0, 0, 0, 1])
    np.testing.assert_array_equal(cli.load_inertia("jtilde"), cli.J_TILDE)


@pytest.fixture(scope="module")
def slew_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("slew")
    code = run("slew", "--axis", "1,0,0", "--angle-deg", 30, "--K", 20, "--out", out)
    return code, out


def test_slew_outputs(slew_dir):
    code, out = slew_dir
    assert code == cli.EXIT_OK
    for name in ("trajectory.csv", "history.json", "result.json", "manifest.json"):
        assert (out / name).is_file()
    res = json.loads((out / "result.json").read_text())
    assert res["converged"] and res["t_f_s"] == pytest.approx(10.44, rel=0.02)
    assert res["replay_attitude_error_deg"] < 0.1 and res["trajectory_issues"] == []
    t, X, U = read_trajectory_csv(out / "trajectory.csv")
    assert len(t) == 20 and t[-1] == pytest.approx(res["t_f_s"])
    man = json.loads((out / "manifest.json").read_text())
    assert man["exit_code"] == 0 and man["command"] == "slew"
    assert set(man["config"]) >= {"params", "scp"}
    assert all(len(h) == 16 for h in man["config_hashes"].values())


def test_slew_is_deterministic(slew_dir, tmp_path):
    _, first = slew_dir
    assert run("slew", "--axis", "1,0,0", "--angle-deg", 30, "--K", 20,
               "--out", tmp_path) == cli.EXIT_OK
    for name in ("trajectory.csv", "history.json", "result.json"):
        assert (tmp_path / name).read_bytes() == (first / name).read_bytes()


def test_slew_not_converged_exit_2(tmp_path):
    assert run("slew", "--angle-deg", 90, "--K", 15, "--n-max", 1,
               "--out", tmp_path) == cli.EXIT_NOT_CONVERGED
    assert json.loads((tmp_path / "manifest.json").read_text())["exit_code"] == 2


def test_schedule_plan_track_pipeline(tmp_path):
    targets = tmp_path / "targets.csv"
    write_targets_csv(targets, target_lattice(5.0, -1.0, 2, 2, region="A"))
    sched_dir = tmp_path / "sched"
    assert run("schedule", "build", "--targets", targets, "--horizon", 40,
               "--max-observations", 2, "--out", sched_dir) == cli.EXIT_OK
    sched = json.loads((sched_dir / "schedule.json").read_text())
    assert sum(e["q"] is not None for e in sched["entries"]) == 2
    skips = json.loads((sched_dir / "skips.json").read_text())
    assert skips["audit"] == []

    plan_dir = tmp_path / "plan"
    code = run("plan", "--schedule", sched_dir / "schedule.json", "--eps-q", 1e-3,
               "--out", plan_dir)
    assert code == cli.EXIT_OK
    metrics = json.loads((plan_dir / "metrics.json").read_text())
    assert metrics["q_e_max"] <= 1e-3 + 1e-6
    assert metrics["trajectory_issues"] == []

    for mode in ("ol", "cl"):
        out = tmp_path / f"track_{mode}"
        assert run("track", "--traj", plan_dir / "trajectory.csv", "--schedule",
                   sched_dir / "schedule.json", "--perturb-inertia", "jtilde",
                   "--mode", mode, "--out", out) == cli.EXIT_OK
    ol = json.loads((tmp_path / "track_ol" / "metrics.json").read_text())
    cl = json.loads((tmp_path / "track_cl" / "metrics.json").read_text())
    assert ol["mode"] == "open_loop" and cl["mode"] == "closed_loop"
    assert cl["q_e_max"] < ol["q_e_max"]
    assert "observations" in cl


def test_atlas_build_fit_query(tmp_path, capsys):
    assert run("atlas", "build", "--axes", "1,0,0", "--angles", "20,40,60,80", "--K", 15,
               "--out", tmp_path) == cli.EXIT_OK
    assert run("atlas", "fit", "--atlas", tmp_path / "atlas.json",
               "--out", tmp_path) == cli.EXIT_OK
    fit, = json.loads((tmp_path / "fits.json").read_text())["fits"]
    assert fit["b"] == pytest.approx(0.5, abs=0.02)
    assert fit["a"] == pytest.approx(2 * np.sqrt(8.5 / 0.1632), rel=0.02)
    capsys.readouterr()
    # 45 degrees about x lies between the 40 and 60 degree grid points
    assert run("atlas", "query", "--atlas", tmp_path / "atlas.json",
               "--to-quat", "0.3826834323650898,0,0,0.9238795325112867") == cli.EXIT_OK
    ans = json.loads(capsys.readouterr().out)
    assert ans["min_time"] == pytest.approx(fit["a"] * np.sqrt(np.pi / 4), rel=0.01)
