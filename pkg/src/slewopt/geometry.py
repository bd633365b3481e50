"""Orbit and ground-target geometry and pointing-schedule generation.

The Earth is a uniformly rotating sphere and orbits are circular two-body
orbits.  Positions are in km, velocities in km/s, times in seconds from the
orbit epoch; the Earth-fixed and inertial frames coincide at ``t = 0``.

A pointing frame has its z-axis along the line of sight from the satellite
to a target, its x-axis along the component of the orbital velocity
orthogonal to z, and y completing the right-handed triad.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quaternion import angle_between, from_rotation_matrix, normalize

R_EARTH = 6378.137          # km
MU_EARTH = 398600.4418      # km^3 / s^2
OMEGA_EARTH = 7.2921159e-5  # rad / s

SIDEREAL_DAY = 2.0 * np.pi / OMEGA_EARTH


@dataclass(frozen=True)
class CircularOrbit:
    """Circular orbit; angles in degrees, altitude in km, epoch in s."""

    altitude: float = 710.0
    inclination: float = 98.5
    raan: float = 0.0
    arg_lat: float = 0.0
    epoch: float = 0.0

    def __post_init__(self):
        if not self.altitude > 0:
            raise ValueError("altitude must be positive")
        if not 0.0 <= self.inclination <= 180.0:
            raise ValueError("inclination must lie in [0, 180] deg")

    @property
    def radius(self) -> float:
        return R_EARTH + self.altitude

    @property
    def mean_motion(self) -> float:
        return math.sqrt(MU_EARTH / self.radius ** 3)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.mean_motion

    def to_dict(self) -> dict:
        return {"altitude_km": self.altitude, "inclination_deg": self.inclination,
                "raan_deg": self.raan, "arg_lat_deg": self.arg_lat,
                "epoch_s": self.epoch}

    @classmethod
    def from_dict(cls, d: dict) -> "CircularOrbit":
        known = {"altitude_km", "inclination_deg", "raan_deg", "arg_lat_deg", "epoch_s"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown orbit keys: {', '.join(unknown)}")
        return cls(altitude=float(d.get("altitude_km", 710.0)),
                   inclination=float(d.get("inclination_deg", 98.5)),
                   raan=float(d.get("raan_deg", 0.0)),
                   arg_lat=float(d.get("arg_lat_deg", 0.0)),
                   epoch=float(d.get("epoch_s", 0.0)))


def propagate(orbit: CircularOrbit, t):
    """Inertial position and velocity at time(s) ``t``.

    Returns ``(r, v)`` of shape (3,) for scalar ``t`` or (N, 3) for arrays.
    """
    t = np.asarray(t, dtype=float)
    u = np.radians(orbit.arg_lat) + orbit.mean_motion * (t - orbit.epoch)
    raan = np.radians(orbit.raan)
    inc = np.radians(orbit.inclination)
    # perifocal-like in-plane basis: P toward the ascending node, Q 90 deg ahead
    P = np.array([np.cos(raan), np.sin(raan), 0.0])
    Q = np.array([-np.sin(raan) * np.cos(inc), np.cos(raan) * np.cos(inc), np.sin(inc)])
    cu = np.cos(u)[..., None]
    su = np.sin(u)[..., None]
    r = orbit.radius * (cu * P + su * Q)
    v = orbit.radius * orbit.mean_motion * (-su * P + cu * Q)
    return r, v


@dataclass(frozen=True)
class GroundTarget:
    """Grid point on the Earth's surface; longitude is normalized to (-180, 180]."""

    id: str
    lat: float
    lon: float
    region: str = "0"

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"target {self.id}: latitude {self.lat} outside [-90, 90]")
        lon = math.fmod(self.lon, 360.0)
        if lon <= -180.0:
            lon += 360.0
        elif lon > 180.0:
            lon -= 360.0
        object.__setattr__(self, "lat", float(self.lat))
        object.__setattr__(self, "lon", float(lon))

    def ecef(self):
        lat, lon = np.radians(self.lat), np.radians(self.lon)
        return R_EARTH * np.array([np.cos(lat) * np.cos(lon),
                                   np.cos(lat) * np.sin(lon),
                                   np.sin(lat)])


def target_eci(target: GroundTarget, t):
    """Inertial position of ``target`` at time(s) ``t`` (Earth rotation about z)."""
    t = np.asarray(t, dtype=float)
    e = target.ecef()
    a = OMEGA_EARTH * t
    c = np.cos(a)[..., None]
    s = np.sin(a)[..., None]
    return np.concatenate([c * e[0] - s * e[1], s * e[0] + c * e[1],
                           np.broadcast_to(e[2], c.shape)], axis=-1)


def subsatellite_point(orbit: CircularOrbit, t: float):
    """Geodetic-free (spherical) latitude and longitude in degrees below the satellite."""
    r, _ = propagate(orbit, float(t))
    a = -OMEGA_EARTH * float(t)
    x = math.cos(a) * r[0] - math.sin(a) * r[1]
    y = math.sin(a) * r[0] + math.cos(a) * r[1]
    return (math.degrees(math.asin(r[2] / np.linalg.norm(r))), math.degrees(math.atan2(y, x)))


def pointing_frame(r_sat, v_sat, r_tgt):
    """Rotation matrix (columns x, y, z of the pointing frame in inertial axes)."""
    los = np.asarray(r_tgt, dtype=float) - np.asarray(r_sat, dtype=float)
    n = np.linalg.norm(los)
    if n == 0.0:
        raise ValueError("satellite and target positions coincide")
    z = los / n
    v = np.asarray(v_sat, dtype=float)
    x = v - (v @ z) * z
    nx = np.linalg.norm(x)
    if nx <= 1e-12 * max(np.linalg.norm(v), 1.0):
        raise ValueError("velocity is parallel to the line of sight; x-axis undefined")
    x /= nx
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def pointing_quaternion(r_sat, v_sat, r_tgt):
    """Attitude of the pointing frame toward ``r_tgt`` as a unit quaternion."""
    return from_rotation_matrix(pointing_frame(r_sat, v_sat, r_tgt))


def nadir_quaternion(r_sat, v_sat):
    """Pointing frame toward the sub-satellite point."""
    r = np.asarray(r_sat, dtype=float)
    return pointing_quaternion(r, v_sat, r * (R_EARTH / np.linalg.norm(r)))


def off_nadir_angle(r_sat, r_tgt):
    """Angle (rad) between nadir and the line of sight; vectorized over rows."""
    r_sat = np.asarray(r_sat, dtype=float)
    los = np.asarray(r_tgt, dtype=float) - r_sat
    c = -np.sum(los * r_sat, axis=-1) / (np.linalg.norm(los, axis=-1)
                                         * np.linalg.norm(r_sat, axis=-1))
    return np.arccos(np.clip(c, -1.0, 1.0))


def line_of_sight_clear(r_sat, r_tgt):
    """True where the target lies above the local horizon (not behind the limb)."""
    r_sat = np.asarray(r_sat, dtype=float)
    r_tgt = np.asarray(r_tgt, dtype=float)
    return np.sum((r_sat - r_tgt) * r_tgt, axis=-1) > 0.0


def _runs(mask, t):
    """Closed intervals ``[t_start, t_end]`` of consecutive True samples."""
    out = []
    idx = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(int), [0]])))
    for a, b in zip(idx[::2], idx[1::2]):
        out.append((float(t[a]), float(t[b - 1])))
    return out


def access_windows(orbit: CircularOrbit, targets: Sequence[GroundTarget], horizon: float,
                   max_off_nadir: float = 45.0, step: float = 1.0, t0: float = 0.0):
    """Sampled access intervals per target id.

    A target is accessible when it is above the satellite's horizon and its
    off-nadir angle is at most ``max_off_nadir`` degrees.  Intervals are
    closed and expressed in samples of ``step`` seconds starting at ``t0``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    t = t0 + np.arange(int(math.floor(horizon / step + 1e-9)) + 1) * step
    r_sat, _ = propagate(orbit, t)
    lim = np.radians(max_off_nadir)
    out = {}
    for tg in targets:
        r_t = target_eci(tg, t)
        ok = line_of_sight_clear(r_sat, r_t) & (off_nadir_angle(r_sat, r_t) <= lim)
        out[tg.id] = _runs(ok, t)
    return out


def read_targets_csv(path) -> list[GroundTarget]:
    """Targets from a CSV with header ``id,lat_deg,lon_deg,region``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"id", "lat_deg", "lon_deg", "region"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {', '.join(sorted(need))}")
        out = []
        for line, row in enumerate(reader, start=2):
            try:
                out.append(GroundTarget(row["id"], float(row["lat_deg"]),
                                        float(row["lon_deg"]), row["region"]))
            except ValueError as exc:
                raise ValueError(f"{path}:{line}: {exc}") from None
    return out


def write_targets_csv(path, targets: Sequence[GroundTarget]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "lat_deg", "lon_deg", "region"])
        for tg in targets:
            w.writerow([tg.id, repr(tg.lat), repr(tg.lon), tg.region])


def target_lattice(lat0: float, lon0: float, rows: int, cols: int, spacing_km: float = 8.0,
                   region: str = "0", prefix: str | None = None) -> list[GroundTarget]:
    """Square lattice of targets centred on ``(lat0, lon0)`` with ``spacing_km``."""
    dlat = np.degrees(spacing_km / R_EARTH)
    dlon = dlat / max(np.cos(np.radians(lat0)), 1e-6)
    prefix = f"{region}-" if prefix is None else prefix
    out = []
    for i in range(rows):
        for j in range(cols):
            out.append(GroundTarget(f"{prefix}{i:02d}{j:02d}",
                                    lat0 + (i - 0.5 * (rows - 1)) * dlat,
                                    lon0 + (j - 0.5 * (cols - 1)) * dlon, region))
    return out


@dataclass
class ScheduleEntry:
    """One schedule sample.

    Observation entries carry a desired attitude ``q`` and a target id;
    rate-only entries (``q is None``) hold the zero-rate requests on the
    samples flanking an observation.
    """

    t: float
    q: np.ndarray | None
    w: np.ndarray
    target_id: str | None = None


@dataclass
class PointingSchedule:
    """Time-ordered desired attitudes and body rates on a uniform sample grid.

    ``t`` is measured from the schedule start, which sits at orbit time
    ``start``; ``q_initial`` is the attitude at the schedule start and
    ``horizon`` its duration.
    """

    entries: list
    sample: float = 1.0
    start: float = 0.0
    horizon: float | None = None
    q_initial: np.ndarray | None = None

    def __post_init__(self):
        ts = [e.t for e in self.entries]
        if any(b <= a for a, b in zip(ts[:-1], ts[1:])):
            raise ValueError("schedule times must be strictly increasing")
        for e in self.entries:
            if e.q is not None and abs(np.linalg.norm(e.q) - 1.0) > 1e-9:
                raise ValueError(f"entry at t = {e.t} s has a non-unit quaternion")
        if not self.sample > 0:
            raise ValueError("sample time must be positive")

    @property
    def observations(self) -> list:
        return [e for e in self.entries if e.q is not None]

    @property
    def t_f(self) -> float:
        if self.horizon is not None:
            return float(self.horizon)
        return float(self.entries[-1].t) if self.entries else 0.0

    def node(self, t: float) -> int:
        k = t / self.sample
        if abs(k - round(k)) > 1e-6:
            raise ValueError(f"time {t} s is not on the {self.sample} s sample grid")
        return int(round(k))

    def to_spec(self, gamma: float = 1e5, rho: float = 1.0, t_f: float | None = None):
        """Node-indexed :class:`PointingScheduleSpec` with ``K = t_f / sample + 1``."""
        from .transcription import PointingScheduleSpec
        t_f = self.t_f if t_f is None else t_f
        K = self.node(t_f) + 1
        for e in self.entries:
            if e.t > t_f + 1e-9:
                raise ValueError(f"schedule entry at t = {e.t} s exceeds t_f = {t_f} s")
        obs = self.observations
        spec = PointingScheduleSpec(
            [self.node(e.t) for e in obs], np.array([e.q for e in obs]).reshape(-1, 4),
            [self.node(e.t) for e in self.entries],
            np.array([e.w for e in self.entries]).reshape(-1, 3), t_f, gamma, rho)
        spec.check_nodes(K)
        return spec, K

    def to_dict(self) -> dict:
        d = {"sample_s": self.sample, "start_s": self.start,
             "entries": [{"t_s": e.t, "q": None if e.q is None else list(map(float, e.q)),
                          "w": list(map(float, e.w)), "target_id": e.target_id}
                         for e in self.entries]}
        if self.horizon is not None:
            d["horizon_s"] = self.horizon
        if self.q_initial is not None:
            d["q_initial"] = list(map(float, self.q_initial))
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "PointingSchedule":
        if "entries" not in d or "sample_s" not in d:
            raise ValueError("schedule JSON needs 'sample_s' and 'entries'")
        entries = []
        for i, e in enumerate(d["entries"]):
            try:
                q = None if e.get("q") is None else normalize(np.array(e["q"], dtype=float))
                if q is not None and abs(np.linalg.norm(e["q"]) - 1.0) > 1e-6:
                    raise ValueError("q is not unit-norm")
                entries.append(ScheduleEntry(float(e["t_s"]), q,
                                             np.array(e.get("w", [0.0, 0.0, 0.0]), dtype=float),
                                             e.get("target_id")))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"schedule entry {i}: {exc}") from None
        q0 = d.get("q_initial")
        return cls(entries, float(d["sample_s"]), float(d.get("start_s", 0.0)),
                   d.get("horizon_s"), None if q0 is None else normalize(np.array(q0, float)))


@dataclass
class SkipReport:
    """Targets left out of a schedule and why."""

    skipped: list = field(default_factory=list)

    def add(self, target_id: str, region: str, reason: str):
        self.skipped.append({"target_id": target_id, "region": region, "reason": reason})

    def __len__(self):
        return len(self.skipped)


def _sweep_order(orbit: CircularOrbit, targets: Sequence[GroundTarget], first_access: dict,
                 t_ref: float, row_tol_km: float):
    """Whiskbroom visiting order within one region.

    Targets are grouped into cross-track rows by their along-track
    coordinate; rows are visited in order of first access and each row is
    swept starting from the end nearest the previous row's finishing end,
    the first row starting at its earliest-accessible target.
    """
    r, v = propagate(orbit, t_ref)
    along = v / np.linalg.norm(v)
    up = r / np.linalg.norm(r)
    cross = np.cross(up, along)
    pos = np.array([target_eci(tg, t_ref) for tg in targets])
    a = pos @ along
    c = pos @ cross
    order = np.argsort(a, kind="stable")
    rows, cur = [], [order[0]]
    for i in order[1:]:
        if a[i] - a[cur[0]] > row_tol_km:
            rows.append(cur)
            cur = [i]
        else:
            cur.append(i)
    rows.append(cur)
    rows.sort(key=lambda row: (min(first_access[targets[i].id] for i in row),
                               float(np.mean(a[row]))))
    out = []
    forward = None
    for row in rows:
        row = sorted(row, key=lambda i: c[i])
        if forward is None:
            # direction fixed by the earliest-accessible point of the first row
            first = min(row, key=lambda i: (first_access[targets[i].id], c[i]))
            forward = c[first] <= np.median(c[row])
        out.extend(row if forward else row[::-1])
        forward = not forward
    return [targets[i] for i in out]


def build_sweep_schedule(orbit: CircularOrbit, targets: Sequence[GroundTarget],
                         slew_time: Callable, horizon: float, sample: float = 1.0,
                         max_off_nadir: float = 45.0, start: float = 0.0,
                         max_observations: int | None = None, row_tol_km: float | None = None,
                         q_initial=None):
    """Greedy sweep-pattern pointing schedule.

    Regions are visited in order of first access and each is finished before
    the next; inside a region targets are swept row by row
    (:func:`_sweep_order`).  Each observation is placed at the earliest
    sample that leaves at least ``slew_time(q_prev, q_next)`` seconds
    (rounded up to whole samples) after the previous observation and lies in
    the target's access window; targets that cannot be fit are recorded in
    the skip report.  Observations carry zero desired rate, as do the
    samples on either side of them.

    ``slew_time(q_from, q_to)`` returns seconds, e.g. an atlas query.
    ``q_initial`` defaults to the nadir attitude at ``start``.

    Returns ``(PointingSchedule, SkipReport)``.
    """
    if not sample > 0:
        raise ValueError("sample time must be positive")
    n_samples = int(math.floor(horizon / sample + 1e-9))
    windows = access_windows(orbit, targets, horizon, max_off_nadir, sample, start)
    first_access = {tid: w[0][0] for tid, w in windows.items() if w}
    skips = SkipReport()
    for tg in targets:
        if tg.id not in first_access:
            skips.add(tg.id, tg.region, "no access in horizon")
    regions = {}
    for tg in targets:
        if tg.id in first_access:
            regions.setdefault(tg.region, []).append(tg)
    if not regions:
        raise ValueError("no feasible observation in the horizon")
    region_order = sorted(regions, key=lambda g: (min(first_access[t.id] for t in regions[g]), g))
    if row_tol_km is None:
        row_tol_km = 0.5 * _median_spacing(targets)

    if q_initial is None:
        r0, v0 = propagate(orbit, start)
        q_initial = nadir_quaternion(r0, v0)
    q_prev = np.asarray(q_initial, dtype=float)
    k_prev = 0
    obs = []
    for g in region_order:
        members = regions[g]
        t_ref = min(first_access[t.id] for t in members)
        for tg in _sweep_order(orbit, members, first_access, t_ref, row_tol_km):
            if max_observations is not None and len(obs) >= max_observations:
                skips.add(tg.id, tg.region, "observation limit reached")
                continue
            placed = _place(orbit, tg, windows[tg.id], q_prev, k_prev, slew_time,
                            sample, start, n_samples, not obs, 1 if not obs else 2)
            if placed is None:
                skips.add(tg.id, tg.region, "slew time exceeds remaining access")
                continue
            k, q = placed
            obs.append((k, q, tg.id))
            q_prev, k_prev = q, k
    if not obs:
        raise ValueError("no feasible observation in the horizon")

    entries = {}
    for k, q, tid in obs:
        entries[k] = ScheduleEntry(k * sample, q, np.zeros(3), tid)
    for k, _, _ in obs:
        for kn in (k - 1, k + 1):
            if 0 <= kn <= n_samples and kn not in entries:
                entries[kn] = ScheduleEntry(kn * sample, None, np.zeros(3), None)
    sched = PointingSchedule([entries[k] for k in sorted(entries)], sample, start,
                             n_samples * sample, normalize(q_initial))
    return sched, skips


def _median_spacing(targets: Sequence[GroundTarget]) -> float:
    """Median nearest-neighbour distance (km) between targets."""
    if len(targets) < 2:
        return 1.0
    P = np.array([tg.ecef() for tg in targets])
    d = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    return float(np.median(d.min(axis=1)))


def _place(orbit, tg, windows, q_prev, k_prev, slew_time, sample, start, n_samples, first,
           hold):
    """Earliest sample for ``tg`` honouring slew time and access; None if none."""
    for a, b in windows:
        ka = int(math.ceil((a - start) / sample - 1e-9))
        kb = int(math.floor((b - start) / sample + 1e-9))
        k = max(ka, k_prev + (0 if first else 1), 1)
        while k <= min(kb, n_samples):
            t = start + k * sample
            r, v = propagate(orbit, t)
            q = pointing_quaternion(r, v, target_eci(tg, t))
            need = int(math.ceil(slew_time(q_prev, q) / sample - 1e-9)) + hold
            if k - k_prev >= max(need, 1):
                return k, q
            k = k_prev + max(need, 1) if k < k_prev + need else k + 1
    return None


def audit_schedule(schedule: PointingSchedule, slew_time: Callable) -> list:
    """Consecutive observations closer than their slew time (empty when clean).

    The first observation is checked against ``q_initial`` when present.
    """
    bad = []
    prev_t, prev_q = (0.0, schedule.q_initial) if schedule.q_initial is not None else (None, None)
    for e in schedule.observations:
        if prev_q is not None:
            need = math.ceil(slew_time(prev_q, e.q) / schedule.sample - 1e-9) * schedule.sample
            if e.t - prev_t < need - 1e-9:
                bad.append({"t_s": e.t, "target_id": e.target_id, "gap_s": e.t - prev_t,
                            "required_s": need})
        prev_t, prev_q = e.t, e.q
    return bad


def attitude_step(q_a, q_b) -> float:
    """Rotation angle (deg) between two attitudes."""
    return float(np.degrees(angle_between(q_a, q_b)))
