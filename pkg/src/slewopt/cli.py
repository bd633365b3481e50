"""Command-line entry point.

Every subcommand writes its data files plus one ``manifest.json`` into the
``--out`` directory.  Data files hold no timestamps, so identical inputs give
identical bytes; wall-clock information lives only in the manifest.

Exit codes: 0 success, 1 usage or configuration error, 2 the optimizer did
not converge, 3 numerical failure in a solver.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .atlas import (DESK_ANGLES, RotationGrid, SlewAtlas, build_atlas, eigenaxis_coefficient,
                    fit_models, power_law_slew_time)
from .dynamics import (IQ, IW, SatelliteParams, read_trajectory_csv, replay,
                       write_trajectory_csv)
from .geometry import (CircularOrbit, PointingSchedule, audit_schedule, build_sweep_schedule,
                       read_targets_csv)
from .quaternion import (IDENTITY, angle_between, axis_angle_to_quaternion, hamilton_product,
                         normalize)
from .scp import ScpConfig, ScpResult, solve_min_time, solve_multi_target
from .tracking import (J_TILDE, LqrWeights, RiccatiError, design_tracker, error_metrics,
                       reference_metrics, simulate)

log = logging.getLogger("slewopt")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    """Bad flag values or unreadable configuration files (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# configuration ingestion

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def load_json(path, what: str) -> dict:
    """Parse a JSON file, turning failures into :class:`ConfigError` with the location."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {what} file {p}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _from_dict(cls, d, path, what):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: {what} must be a JSON object")
    try:
        return cls.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_params(path) -> SatelliteParams:
    if path is None:
        return SatelliteParams()
    return _from_dict(SatelliteParams, load_json(path, "params"), path, "params")


def load_scp(path, base: ScpConfig, overrides: dict) -> ScpConfig:
    """Defaults, then the SCP JSON, then flag overrides (last wins)."""
    d = base.to_dict()
    if path is not None:
        extra = load_json(path, "SCP config")
        if not isinstance(extra, dict):
            raise ConfigError(f"{path}: SCP config must be a JSON object")
        d.update(extra)
    d.update({k: v for k, v in overrides.items() if v is not None})
    return _from_dict(ScpConfig, d, path or "--scp", "SCP config")


def parse_vector(text: str, n: int, flag: str) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise ConfigError(f"{flag}: expected {n} comma-separated numbers, got {text!r}") from None
    if v.size != n or not np.all(np.isfinite(v)):
        raise ConfigError(f"{flag}: expected {n} finite comma-separated numbers, got {text!r}")
    return v


def parse_quaternion(text: str, flag: str) -> np.ndarray:
    q = parse_vector(text, 4, flag)
    if np.linalg.norm(q) == 0.0:
        raise ConfigError(f"{flag}: zero quaternion")
    return normalize(q)


def load_inertia(spec: str) -> np.ndarray:
    """``jtilde`` for the built-in mismatch case, or a JSON file with a 3x3 matrix
    (bare, or under the key ``J``)."""
    if spec == "jtilde":
        return J_TILDE.copy()
    d = load_json(spec, "inertia")
    J = d.get("J") if isinstance(d, dict) else d
    try:
        J = np.array(J, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{spec}: inertia must be a 3x3 numeric matrix") from None
    if J.shape != (3, 3):
        raise ConfigError(f"{spec}: inertia must be a 3x3 matrix, got shape {J.shape}")
    return J


# ---------------------------------------------------------------------------
# run manifest

@dataclass
class RunManifest:
    """Record of one CLI run, written as ``manifest.json`` next to its outputs."""

    command: str
    argv: list
    config: dict = field(default_factory=dict)
    config_hashes: dict = field(default_factory=dict)
    input_hashes: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    status: str = ""
    exit_code: int = 0
    started_utc: str = ""
    wall_time_s: float = 0.0
    tool_version: str = __version__
    determinism: str = ("No random numbers are drawn. Data files carry no timestamps and are "
                        "byte-identical for identical inputs.")
    _t0: float = 0.0

    def start(self):
        self.started_utc = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self._t0 = time.perf_counter()

    def add_config(self, name: str, d: dict):
        self.config[name] = d
        self.config_hashes[name] = _sha256(json.dumps(d, sort_keys=True).encode())[:16]

    def add_input(self, path):
        if path is not None and Path(path).is_file():
            self.input_hashes[str(path)] = _sha256(Path(path).read_bytes())[:16]

    def write(self, out_dir: Path):
        self.wall_time_s = round(time.perf_counter() - self._t0, 3)
        d = {k: v for k, v in self.__dict__.items() if not k.startswith("_")}
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(d, indent=1) + "\n")
        return path


class _Run:
    """Output directory bookkeeping for one subcommand."""

    def __init__(self, args, command: str):
        self.out = Path(args.out)
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {self.out}: {exc.strerror}") \
                from None
        self.manifest = RunManifest(command, list(args.argv))
        self.manifest.start()

    def path(self, name: str) -> Path:
        p = self.out / name
        self.manifest.outputs.append(str(p))
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=1) + "\n")
        return p

    def finish(self, code: int, status: str) -> int:
        self.manifest.exit_code = code
        self.manifest.status = status
        self.manifest.write(self.out)
        return code


def _scp_exit(res: ScpResult) -> tuple[int, str]:
    if res.converged:
        return EXIT_OK, "converged"
    if res.status == "solver_failure":
        return EXIT_NUMERICAL, f"solver_failure ({res.solver_status})"
    return EXIT_NOT_CONVERGED, res.status


def _check_trajectory(X, U, p: SatelliteParams, tol: float = 1e-6) -> list:
    """Problems that would make an emitted trajectory invalid."""
    issues = []
    qn = np.abs(np.linalg.norm(X[:, IQ], axis=1) - 1.0).max()
    if qn > tol:
        issues.append(f"quaternion norm off by {qn:.2e}")
    if np.abs(X[:, 7:11]).max() > p.r_max + tol:
        issues.append("rotor momentum bound exceeded")
    if np.abs(U).max() > p.u_max + tol:
        issues.append("torque bound exceeded")
    return issues


# ---------------------------------------------------------------------------
# subcommands

def cmd_slew(args) -> int:
    p = load_params(args.params)
    cfg = load_scp(args.scp, ScpConfig(), {"K": args.K, "N_max": args.n_max})
    q0 = IDENTITY.copy() if args.from_quat is None else parse_quaternion(args.from_quat,
                                                                          "--from-quat")
    if args.to_quat is not None:
        qf = parse_quaternion(args.to_quat, "--to-quat")
    else:
        if args.angle_deg is None:
            raise ConfigError("give --angle-deg (with --axis) or --to-quat")
        axis = parse_vector(args.axis, 3, "--axis")
        if np.linalg.norm(axis) == 0.0:
            raise ConfigError("--axis: zero vector")
        # rotation about a body-frame axis of the initial attitude
        qf = hamilton_product(q0, axis_angle_to_quaternion(axis, math.radians(args.angle_deg)))
    if abs(abs(float(q0 @ qf)) - 1.0) < 1e-12:
        raise ConfigError("zero rotation: the target attitude equals the initial attitude")

    run = _Run(args, "slew")
    run.manifest.add_config("params", p.to_dict())
    run.manifest.add_config("scp", cfg.to_dict())
    run.manifest.add_input(args.params)
    run.manifest.add_input(args.scp)
    res = solve_min_time(q0, qf, p, cfg)
    st = res.stack
    t, Xr, Ur = replay(st.X[0], st.times, st.U, p)
    write_trajectory_csv(run.path("trajectory.csv"), st.times, st.X, st.U, p)
    run.write_json("history.json", json.loads(res.history_json()))
    replay_err = float(np.degrees(angle_between(Xr[-1, IQ], qf)))
    summary = {"status": res.status, "converged": res.converged, "iterations": res.iterations,
               "t_f_s": float(st.tf), "J_vc": res.J_vc, "J_tr": res.J_tr,
               "q_final": qf.tolist(), "replay_attitude_error_deg": replay_err,
               "replay_rate_error_rad_s": float(np.linalg.norm(Xr[-1, IW])),
               "trajectory_issues": _check_trajectory(st.X, st.U, p)}
    run.write_json("result.json", summary)
    code, status = _scp_exit(res)
    print(json.dumps({k: summary[k] for k in ("status", "iterations", "t_f_s")}))
    return run.finish(code, status)


def load_schedule(path) -> PointingSchedule:
    return _from_dict(PointingSchedule, load_json(path, "schedule"), path, "schedule")


def cmd_plan(args) -> int:
    p = load_params(args.params)
    sched = load_schedule(args.schedule)
    try:
        spec, K = sched.to_spec(gamma=args.gamma, rho=args.rho)
    except ValueError as exc:
        raise ConfigError(f"{args.schedule}: {exc}") from None
    cfg = load_scp(args.scp, ScpConfig.multi_target(K=K, t_f=spec.t_f),
                   {"N_max": args.n_max})
    if cfg.K != K or cfg.t_f != spec.t_f:
        raise ConfigError(f"K and t_f come from the schedule ({K} nodes over {spec.t_f} s)")
    q0 = sched.q_initial if sched.q_initial is not None else (
        spec.q_des[0] if len(spec.q_des) else IDENTITY.copy())

    run = _Run(args, "plan")
    run.manifest.add_config("params", p.to_dict())
    run.manifest.add_config("scp", cfg.to_dict())
    run.manifest.add_config("formulation", {"gamma": args.gamma, "rho": args.rho,
                                            "eps_q": args.eps_q, "eps_w": args.eps_w})
    for f in (args.params, args.scp, args.schedule):
        run.manifest.add_input(f)
    eps_q = math.inf if args.eps_q is None else args.eps_q
    eps_w = math.inf if args.eps_w is None else args.eps_w
    res = solve_multi_target(q0, spec, p, cfg, eps_q, eps_w)
    st = res.stack
    write_trajectory_csv(run.path("trajectory.csv"), st.times, st.X, st.U, p)
    run.write_json("history.json", json.loads(res.history_json()))
    metrics = {"status": res.status, "converged": res.converged,
               "iterations": res.iterations, "J_vc": res.J_vc, "J_tr": res.J_tr}
    if len(spec.q_nodes):
        metrics.update(error_metrics(st.X, spec.q_nodes, spec.q_des, spec.w_nodes,
                                     spec.w_des).to_dict())
    metrics["control_effort"] = float(np.linalg.norm(st.U, axis=1).sum())
    metrics["trajectory_issues"] = _check_trajectory(st.X, st.U, p)
    run.write_json("metrics.json", metrics)
    code, status = _scp_exit(res)
    print(json.dumps({k: metrics.get(k) for k in ("status", "iterations", "q_e_avg")}))
    return run.finish(code, status)


def _parse_angles(text: str) -> tuple:
    if text == "desk":
        return DESK_ANGLES
    if text == "full":
        from .atlas import DEFAULT_ANGLES
        return DEFAULT_ANGLES
    try:
        return tuple(sorted(float(a) for a in text.split(",")))
    except ValueError:
        raise ConfigError(f"--angles: expected 'desk', 'full' or degrees, got {text!r}") from None


def _parse_axes(text: str) -> RotationGrid:
    if text.isdigit():
        return RotationGrid.desk(int(text)).axes
    axes = []
    for chunk in text.split(";"):
        axes.append(parse_vector(chunk, 3, "--axes"))
    return np.array(axes)


def cmd_atlas_build(args) -> int:
    p = load_params(args.params)
    cfg = load_scp(args.scp, ScpConfig(), {"K": args.K})
    try:
        grid = RotationGrid(_parse_axes(args.axes), _parse_angles(args.angles))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    run = _Run(args, "atlas build")
    run.manifest.add_config("params", p.to_dict())
    run.manifest.add_config("scp", cfg.to_dict())
    run.manifest.add_input(args.params)
    run.manifest.add_input(args.scp)
    atlas = build_atlas(grid, p, cfg, args.jobs)
    n_ok = sum(e["converged"] for e in atlas.entries.values())
    run.path("atlas.json").write_text(atlas.dumps() + "\n")
    print(json.dumps({"points": len(atlas.entries), "converged": n_ok}))
    if n_ok < len(atlas.entries):
        return run.finish(EXIT_NOT_CONVERGED, f"{len(atlas.entries) - n_ok} points unconverged")
    return run.finish(EXIT_OK, "converged")


def load_atlas(path) -> SlewAtlas:
    return _from_dict(SlewAtlas, load_json(path, "atlas"), path, "atlas")


def cmd_atlas_fit(args) -> int:
    atlas = load_atlas(args.atlas)
    run = _Run(args, "atlas fit")
    run.manifest.add_input(args.atlas)
    try:
        fits = fit_models(atlas, args.min_points, skip_insufficient=True)
    except ValueError as exc:
        raise ConfigError(f"{args.atlas}: {exc}") from None
    if not fits:
        raise ConfigError(f"{args.atlas}: no axis has {args.min_points} converged angles")
    rows = []
    for i, f in sorted(fits.items()):
        d = f.to_dict()
        d["axis"] = atlas.grid.axes[i].tolist()
        rows.append(d)
    run.write_json("fits.json", {"params_hash": atlas.params_hash, "fits": rows})
    run.path("atlas.json").write_text(atlas.dumps() + "\n")
    for d in rows:
        print(f"axis {d['axis_idx']:3d}  a {d['a']:.4f}  b {d['b']:.4f}  "
              f"c {d['c']:.4f}  d {d['d']:.4f}")
    return run.finish(EXIT_OK, "fitted")


def cmd_atlas_query(args) -> int:
    atlas = load_atlas(args.atlas)
    q0 = IDENTITY.copy() if args.from_quat is None else parse_quaternion(args.from_quat,
                                                                          "--from-quat")
    q1 = parse_quaternion(args.to_quat, "--to-quat")
    try:
        ans = atlas.query(q0, q1)
    except ValueError as exc:
        raise ConfigError(f"{args.atlas}: {exc}") from None
    print(json.dumps(ans))
    if args.out is None:
        return EXIT_OK
    run = _Run(args, "atlas query")
    run.manifest.add_input(args.atlas)
    run.write_json("query.json", {"from": q0.tolist(), "to": q1.tolist(), **ans})
    return run.finish(EXIT_OK, "answered")


def cmd_schedule_build(args) -> int:
    p = load_params(args.params)
    try:
        targets = read_targets_csv(args.targets)
    except OSError as exc:
        raise ConfigError(f"cannot read targets file {args.targets}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"{args.targets}: {exc}") from None
    orbit = CircularOrbit() if args.orbit is None else _from_dict(
        CircularOrbit, load_json(args.orbit, "orbit"), args.orbit, "orbit")
    if args.atlas is not None:
        atlas = load_atlas(args.atlas)
        slew_time, model = atlas.slew_time, {"atlas": str(args.atlas)}
    else:
        a = eigenaxis_coefficient(p)
        slew_time, model = power_law_slew_time(a), {"power_law_a": a, "power_law_b": 0.5}
    run = _Run(args, "schedule build")
    run.manifest.add_config("orbit", orbit.to_dict())
    run.manifest.add_config("slew_time_model", model)
    for f in (args.targets, args.orbit, args.atlas, args.params):
        run.manifest.add_input(f)
    try:
        sched, skips = build_sweep_schedule(
            orbit, targets, slew_time, args.horizon, sample=args.sample,
            max_off_nadir=args.max_off_nadir, start=args.start,
            max_observations=args.max_observations)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    audit = audit_schedule(sched, slew_time)
    run.path("schedule.json").write_text(sched.dumps() + "\n")
    run.write_json("skips.json", {"skipped": skips.skipped, "audit": audit})
    print(json.dumps({"observations": len(sched.observations),
                      "skipped": len(skips.skipped), "audit_violations": len(audit)}))
    if audit:
        return run.finish(EXIT_NOT_CONVERGED, "slew-time audit failed")
    return run.finish(EXIT_OK, "built")


def cmd_track(args) -> int:
    p = load_params(args.params)
    try:
        t, X, U = read_trajectory_csv(args.traj)
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory file {args.traj}: {exc.strerror}") from None
    except (ValueError, IndexError, StopIteration) as exc:
        raise ConfigError(f"{args.traj}: {exc}") from None
    obs = []
    if args.schedule is not None:
        sched = load_schedule(args.schedule)
        obs = [sched.node(e.t) for e in sched.observations]
        if obs and max(obs) >= len(t):
            raise ConfigError(f"{args.schedule}: observations beyond the trajectory horizon")
    weights = LqrWeights() if args.weights is None else _weights(args.weights)
    if args.perturb_inertia is None:
        J_true, used = p.J, "nominal"
    else:
        J_true, used = load_inertia(args.perturb_inertia), args.perturb_inertia
    try:
        p_true = p.with_inertia(J_true)
    except ValueError as exc:
        raise ConfigError(f"--perturb-inertia: {exc}") from None
    mode = {"cl": "closed_loop", "ol": "open_loop"}[args.mode]

    run = _Run(args, "track")
    run.manifest.add_config("params", p.to_dict())
    run.manifest.add_config("inertia_true", np.asarray(J_true).tolist())
    run.manifest.add_config("lqr", {"Q": weights.Q.tolist(), "R": weights.R.tolist(),
                                    "alpha": weights.alpha, "Q_K": weights.Q_K.tolist()})
    for f in (args.params, args.traj, args.schedule, args.weights):
        run.manifest.add_input(f)
    try:
        gains = design_tracker(t, X, p, weights, obs)
    except RiccatiError as exc:
        log.error("%s", exc)
        return run.finish(EXIT_NUMERICAL, "riccati failure")
    sim = simulate(t, X, U, p_true, mode, gains)
    write_trajectory_csv(run.path("trajectory.csv"), sim.t, sim.X, sim.U, p_true)
    m = reference_metrics(sim.X, X, np.arange(len(t)))
    out = m.to_dict(mode=mode, inertia_used=np.asarray(J_true).tolist())
    if obs:
        mo = reference_metrics(sim.X, X, obs)
        out["observations"] = mo.to_dict()
    run.write_json("metrics.json", out)
    print(json.dumps({k: out[k] for k in ("mode", "q_e_max", "w_e_max")}))
    return run.finish(EXIT_OK, "simulated")


def _weights(path) -> LqrWeights:
    d = load_json(path, "LQR weights")
    if not isinstance(d, dict) or set(d) - {"Q", "R", "alpha", "Q_K"}:
        raise ConfigError(f"{path}: LQR weights take the keys Q, R, alpha and Q_K")
    try:
        return LqrWeights(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="slewopt", description="Attitude slew planning, pointing "
                 "trajectories and tracking simulation for rotor-actuated satellites.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--log-level", default="WARNING",
                    choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="logging verbosity")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_default):
        sp.add_argument("--params", help="satellite parameter JSON (default: built-in)")
        sp.add_argument("--out", default=out_default, help="output directory")

    sp = sub.add_parser("slew", help="minimum-time rest-to-rest slew")
    sp.add_argument("--axis", default="1,0,0", help="rotation axis 'x,y,z' in the body frame")
    sp.add_argument("--angle-deg", type=float, help="rotation angle in degrees")
    sp.add_argument("--to-quat", help="target quaternion 'x,y,z,w' (instead of axis/angle)")
    sp.add_argument("--from-quat", help="initial quaternion 'x,y,z,w' (default identity)")
    sp.add_argument("--scp", help="SCP config JSON")
    sp.add_argument("--K", type=int, help="number of temporal nodes")
    sp.add_argument("--n-max", type=int, help="maximum SCP iterations")
    common(sp, "slew_out")
    sp.set_defaults(func=cmd_slew)

    sp = sub.add_parser("plan", help="minimum-effort trajectory through a pointing schedule")
    sp.add_argument("--schedule", required=True, help="schedule JSON")
    sp.add_argument("--scp", help="SCP config JSON")
    sp.add_argument("--gamma", type=float, default=1e5, help="rate-error weight")
    sp.add_argument("--rho", type=float, default=1.0, help="control-effort weight")
    sp.add_argument("--eps-q", type=float,
                    help="hard attitude-error bound (constraint formulation)")
    sp.add_argument("--eps-w", type=float, help="hard rate-error bound in rad/s")
    sp.add_argument("--n-max", type=int, help="maximum SCP iterations")
    common(sp, "plan_out")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("atlas", help="slew atlas campaign")
    asub = sp.add_subparsers(dest="atlas_command", required=True, parser_class=_Parser)
    b = asub.add_parser("build", help="solve every grid point")
    b.add_argument("--axes", default="12",
                   help="axis count (principal axes first) or 'x,y,z;x,y,z;...'")
    b.add_argument("--angles", default="desk",
                   help="'desk', 'full' or comma-separated degrees")
    b.add_argument("--jobs", type=int, default=1, help="worker processes")
    b.add_argument("--scp", help="SCP config JSON")
    b.add_argument("--K", type=int, help="number of temporal nodes")
    common(b, "atlas_out")
    b.set_defaults(func=cmd_atlas_build)
    f = asub.add_parser("fit", help="per-axis time and energy fits")
    f.add_argument("--atlas", required=True, help="atlas JSON")
    f.add_argument("--min-points", type=int, default=4, help="converged angles needed per axis")
    f.add_argument("--out", default="atlas_out", help="output directory")
    f.set_defaults(func=cmd_atlas_fit)
    q = asub.add_parser("query", help="estimated slew time and energy between two attitudes")
    q.add_argument("--atlas", required=True, help="atlas JSON")
    q.add_argument("--from-quat", help="initial quaternion 'x,y,z,w' (default identity)")
    q.add_argument("--to-quat", required=True, help="target quaternion 'x,y,z,w'")
    q.add_argument("--out", help="also write query.json and a manifest to this directory")
    q.set_defaults(func=cmd_atlas_query)

    sp = sub.add_parser("schedule", help="pointing schedules")
    ssub = sp.add_subparsers(dest="schedule_command", required=True, parser_class=_Parser)
    b = ssub.add_parser("build", help="greedy sweep schedule over ground targets")
    b.add_argument("--targets", required=True, help="targets CSV (id,lat_deg,lon_deg,region)")
    b.add_argument("--orbit", help="circular orbit JSON (default: 710 km sun-synchronous)")
    b.add_argument("--max-off-nadir", type=float, default=45.0, help="degrees")
    b.add_argument("--horizon", type=float, default=600.0, help="schedule length in s")
    b.add_argument("--sample", type=float, default=1.0, help="sample time in s")
    b.add_argument("--start", type=float, default=0.0, help="orbit time of the schedule start")
    b.add_argument("--max-observations", type=int, help="stop after this many observations")
    b.add_argument("--atlas", help="atlas JSON for slew times (default: eigenaxis model)")
    common(b, "schedule_out")
    b.set_defaults(func=cmd_schedule_build)

    sp = sub.add_parser("track", help="LQR tracking simulation of a reference trajectory")
    sp.add_argument("--traj", required=True, help="reference trajectory CSV")
    sp.add_argument("--schedule", help="schedule JSON marking the observation nodes")
    sp.add_argument("--perturb-inertia",
                    help="true inertia: 'jtilde' or a JSON 3x3 matrix (default nominal)")
    sp.add_argument("--mode", choices=["cl", "ol"], default="cl",
                    help="closed loop (LQR) or open loop")
    sp.add_argument("--weights", help="LQR weights JSON with Q, R, alpha, Q_K")
    common(sp, "track_out")
    sp.set_defaults(func=cmd_track)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"slewopt: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
