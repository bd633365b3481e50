"""Slew atlas: minimum time and energy over a grid of axis-angle rotations.

Every grid point is a rest-to-rest minimum-time slew from the identity.  Per
axis, the campaign is summarized by a power law ``T = a * theta**b`` for the
slew time and a line ``E = c * theta + d`` for the ADCS energy, with theta in
radians.  Queries look up the nearest tabulated axis and interpolate in
angle, falling back to the fits outside the tabulated range.

The atlas covers rest-to-rest slews only; boundary rates are not modelled.
"""

from __future__ import annotations

import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import SatelliteParams, cumulative_energy, instantaneous_power, replay
from .quaternion import (IDENTITY, angle_between, axis_angle_to_quaternion,
                         equidistributed_axes, error_quaternion, quaternion_to_axis_angle)
from .scp import ScpConfig, solve_min_time

log = logging.getLogger(__name__)

DEFAULT_ANGLES = tuple(list(range(-180, -14, 5)) + list(range(-10, 0)) + list(range(1, 11))
                       + list(range(15, 181, 5)))
DESK_ANGLES = (5, 10, 20, 30, 45, 60, 75, 90, 105, 120, 150, 180)
PRINCIPAL_AXES = np.eye(3)

# fits only use rotations above this magnitude
FIT_MIN_DEG = 1.0


@dataclass
class RotationGrid:
    """Axes (unit vectors) crossed with signed angles in degrees; 0 is excluded."""

    axes: np.ndarray
    angles: tuple

    def __post_init__(self):
        self.axes = np.atleast_2d(np.asarray(self.axes, dtype=float))
        n = np.linalg.norm(self.axes, axis=1)
        if self.axes.shape[1] != 3 or np.any(n == 0):
            raise ValueError("axes must be nonzero 3-vectors")
        self.axes = self.axes / n[:, None]
        self.angles = tuple(float(a) for a in self.angles)
        if any(a == 0.0 for a in self.angles):
            raise ValueError("the zero rotation is not a grid point")
        if list(self.angles) != sorted(set(self.angles)):
            raise ValueError("angles must be strictly increasing")

    @classmethod
    def full(cls, n_axes: int = 100) -> "RotationGrid":
        return cls(equidistributed_axes(n_axes), DEFAULT_ANGLES)

    @classmethod
    def desk(cls, n_axes: int = 12, angles=DESK_ANGLES, principal: bool = True) -> "RotationGrid":
        """Reduced campaign; ``principal`` puts the body axes first."""
        axes = equidistributed_axes(n_axes - 3 if principal else n_axes)
        if principal:
            axes = np.vstack([PRINCIPAL_AXES, axes])
        return cls(axes, angles)

    def __len__(self):
        return len(self.axes) * len(self.angles)

    def tuples(self):
        """``(axis_idx, angle_deg)`` for every grid point."""
        return [(i, a) for i in range(len(self.axes)) for a in self.angles]


@dataclass
class AxisFit:
    """Per-axis models ``T = a theta^b`` and ``E = c theta + d`` (theta in rad)."""

    axis_idx: int
    a: float
    b: float
    c: float
    d: float
    r2_time: float = float("nan")
    r2_energy: float = float("nan")
    n_points: int = 0

    def time(self, theta):
        return self.a * np.abs(theta) ** self.b

    def energy(self, theta):
        return self.c * np.abs(theta) + self.d

    def to_dict(self) -> dict:
        return {"axis_idx": self.axis_idx, "a": self.a, "b": self.b, "c": self.c, "d": self.d,
                "r2_time": self.r2_time, "r2_energy": self.r2_energy,
                "n_points": self.n_points}

    @classmethod
    def from_dict(cls, d: dict) -> "AxisFit":
        return cls(int(d["axis_idx"]), float(d["a"]), float(d["b"]), float(d["c"]),
                   float(d["d"]), float(d.get("r2_time", "nan")),
                   float(d.get("r2_energy", "nan")), int(d.get("n_points", 0)))


def fit_power_law(theta, T):
    """Log-log least squares for ``T = a theta^b``; returns ``(a, b, r2)``."""
    theta = np.abs(np.asarray(theta, dtype=float))
    T = np.asarray(T, dtype=float)
    if theta.size < 2 or np.any(theta <= 0) or np.any(T <= 0):
        raise ValueError("power-law fit needs at least two positive points")
    X = np.column_stack([np.ones_like(theta), np.log(theta)])
    coef, *_ = np.linalg.lstsq(X, np.log(T), rcond=None)
    return float(np.exp(coef[0])), float(coef[1]), _r2(np.log(T), X @ coef)


def fit_linear(theta, E):
    """Ordinary least squares for ``E = c theta + d``; returns ``(c, d, r2)``."""
    theta = np.abs(np.asarray(theta, dtype=float))
    E = np.asarray(E, dtype=float)
    if theta.size < 2:
        raise ValueError("linear fit needs at least two points")
    X = np.column_stack([theta, np.ones_like(theta)])
    coef, *_ = np.linalg.lstsq(X, E, rcond=None)
    return float(coef[0]), float(coef[1]), _r2(E, X @ coef)


def _r2(y, yhat) -> float:
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def slew_energy(result, p: SatelliteParams, substeps: int = 10) -> float:
    """ADCS energy (J) of a slew, from a nonlinear replay of its FOH torques."""
    st = result.stack
    t, X, U = replay(st.X[0], st.times, st.U, p, substeps)
    return float(cumulative_energy(t, instantaneous_power(X, U, p))[-1])


def solve_instance(axis, angle_deg: float, p: SatelliteParams, cfg: ScpConfig) -> dict:
    """One grid point: minimum-time slew from the identity and its energy."""
    qf = axis_angle_to_quaternion(axis, np.radians(angle_deg))
    res = solve_min_time(IDENTITY, qf, p, cfg)
    out = {"t_min_s": float(res.tf), "energy_j": float("nan"),
           "converged": bool(res.converged), "iters": int(res.iterations),
           "status": res.status}
    if res.status != "solver_failure":
        out["energy_j"] = slew_energy(res, p)
    if not res.converged:
        log.warning("atlas point axis %s angle %g deg: %s", np.round(axis, 4), angle_deg,
                    res.status if res.solver_status is None
                    else f"{res.status} ({res.solver_status})")
    return out


def _solve_job(args):
    axis_idx, axis, angle, p_dict, cfg_dict = args
    entry = solve_instance(axis, angle, SatelliteParams.from_dict(p_dict),
                           ScpConfig.from_dict(cfg_dict))
    return axis_idx, angle, entry


@dataclass
class SlewAtlas:
    """Campaign results on a :class:`RotationGrid` plus optional per-axis fits.

    ``entries`` maps ``(axis_idx, angle_deg)`` to a dict with ``t_min_s``,
    ``energy_j``, ``converged``, ``iters`` and ``status``.
    """

    grid: RotationGrid
    entries: dict
    params_hash: str = ""
    config: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("empty atlas")

    def table(self, key: str = "t_min_s", converged_only: bool = True):
        """(n_axes, n_angles) array of ``key``; NaN where missing or unconverged."""
        A = np.full((len(self.grid.axes), len(self.grid.angles)), np.nan)
        col = {a: j for j, a in enumerate(self.grid.angles)}
        for (i, a), e in self.entries.items():
            if e["converged"] or not converged_only:
                A[i, col[a]] = e[key]
        return A

    def monotonicity_violations(self, rtol: float = 1e-3) -> list:
        """Axis/angle pairs where min time drops as |theta| grows (diagnostic)."""
        bad = []
        T = self.table()
        ang = np.array(self.grid.angles)
        for i in range(T.shape[0]):
            for side in (ang > 0, ang < 0):
                idx = np.flatnonzero(side)
                idx = idx[np.argsort(np.abs(ang[idx]))]
                vals = T[i, idx]
                ok = ~np.isnan(vals)
                v, a = vals[ok], ang[idx][ok]
                for j in range(1, v.size):
                    if v[j] < v[j - 1] * (1.0 - rtol):
                        bad.append((i, float(a[j])))
        return bad

    def lookup(self, axis_idx: int, angle_deg: float):
        e = self.entries.get((axis_idx, float(angle_deg)))
        return None if e is None else dict(e)

    def query(self, q_from, q_to) -> dict:
        """Estimated rest-to-rest minimum time (s) and energy (J) from q_from to q_to.

        The relative rotation is matched to the nearest tabulated axis
        (either sign); its angle is interpolated linearly between converged
        tabulated angles and extrapolated with the axis fit outside them.
        """
        aa = quaternion_to_axis_angle(error_quaternion(q_to, q_from))
        if aa.angle == 0.0:
            return {"min_time": 0.0, "energy": 0.0}
        cosines = self.grid.axes @ aa.axis
        i = int(np.argmax(np.abs(cosines)))
        theta = math.degrees(aa.angle) * (1.0 if cosines[i] >= 0 else -1.0)
        return self._along_axis(i, theta)

    def _along_axis(self, i: int, theta_deg: float) -> dict:
        ang = np.array(self.grid.angles)
        T = self.table("t_min_s")[i]
        E = self.table("energy_j")[i]
        side = ang * theta_deg > 0
        ok = side & ~np.isnan(T)
        a, t_i, e_i = np.abs(ang[ok]), T[ok], E[ok]
        order = np.argsort(a)
        a, t_i, e_i = a[order], t_i[order], e_i[order]
        x = abs(theta_deg)
        if a.size and a[0] <= x <= a[-1]:
            return {"min_time": float(np.interp(x, a, t_i)),
                    "energy": float(np.interp(x, a, e_i))}
        fit = self.fits.get(i)
        if fit is None:
            if not a.size:
                raise ValueError(f"atlas has no converged data on axis {i}")
            # nearest knot, scaled by the square-root law
            j = 0 if x < a[0] else -1
            return {"min_time": float(t_i[j] * math.sqrt(x / a[j])),
                    "energy": float(e_i[j] * x / a[j])}
        th = math.radians(x)
        return {"min_time": float(fit.time(th)), "energy": float(max(fit.energy(th), 0.0))}

    def slew_time(self, q_from, q_to) -> float:
        return self.query(q_from, q_to)["min_time"]

    def to_dict(self) -> dict:
        ents = []
        for (i, a) in sorted(self.entries):
            e = self.entries[(i, a)]
            ents.append({"axis_idx": i, "angle_deg": a, "t_min_s": e["t_min_s"],
                         "energy_j": e["energy_j"], "converged": e["converged"],
                         "iters": e["iters"], "status": e.get("status", "")})
        return {"params_hash": self.params_hash, "config": self.config,
                "axes": self.grid.axes.tolist(), "angles_deg": list(self.grid.angles),
                "entries": ents, "fits": [self.fits[k].to_dict() for k in sorted(self.fits)]}

    def dumps(self) -> str:
        # NaN energies of failed points are written as null
        return json.dumps(_nan_to_none(self.to_dict()), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "SlewAtlas":
        for key in ("axes", "angles_deg", "entries"):
            if key not in d:
                raise ValueError(f"atlas JSON is missing '{key}'")
        grid = RotationGrid(d["axes"], d["angles_deg"])
        entries = {}
        for e in d["entries"]:
            entries[(int(e["axis_idx"]), float(e["angle_deg"]))] = {
                "t_min_s": _num(e["t_min_s"]), "energy_j": _num(e["energy_j"]),
                "converged": bool(e["converged"]), "iters": int(e["iters"]),
                "status": e.get("status", "")}
        fits = {int(f["axis_idx"]): AxisFit.from_dict(f) for f in d.get("fits", [])}
        return cls(grid, entries, d.get("params_hash", ""), d.get("config", {}), fits)


def _num(v) -> float:
    return float("nan") if v is None else float(v)


def _nan_to_none(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_nan_to_none(v) for v in obj]
    return obj


def build_atlas(grid: RotationGrid, p: SatelliteParams, cfg: ScpConfig | None = None,
                jobs: int = 1) -> SlewAtlas:
    """Solve every grid point; ``jobs > 1`` fans out to a process pool.

    Unconverged points stay in the atlas with their status and are ignored
    by the fits and queries.
    """
    cfg = cfg or ScpConfig()
    work = [(i, grid.axes[i], a, p.to_dict(), cfg.to_dict()) for i, a in grid.tuples()]
    jobs = max(1, min(jobs, len(work), os.cpu_count() or 1))
    if jobs == 1:
        results = [_solve_job(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve_job, work, chunksize=1))
    entries = {(i, float(a)): e for i, a, e in results}
    return SlewAtlas(grid, entries, p.digest(), cfg.to_dict())


def fit_models(atlas: SlewAtlas, min_points: int = 4, skip_insufficient: bool = False) -> dict:
    """Per-axis power-law time fit and linear energy fit over |theta| > 1 deg.

    Both signs of an angle fold onto |theta|.  Axes with fewer than
    ``min_points`` converged angles raise, or are left out when
    ``skip_insufficient`` is set.
    """
    fits = {}
    ang = np.array(atlas.grid.angles)
    T = atlas.table("t_min_s")
    E = atlas.table("energy_j")
    for i in range(len(atlas.grid.axes)):
        ok = ~np.isnan(T[i]) & ~np.isnan(E[i]) & (np.abs(ang) > FIT_MIN_DEG)
        if ok.sum() < min_points:
            if skip_insufficient:
                continue
            raise ValueError(f"axis {i}: {int(ok.sum())} converged angles, "
                             f"need {min_points} to fit")
        th = np.radians(np.abs(ang[ok]))
        a, b, r2t = fit_power_law(th, T[i, ok])
        c, d, r2e = fit_linear(th, E[i, ok])
        fits[i] = AxisFit(i, a, b, c, d, r2t, r2e, int(ok.sum()))
    atlas.fits = fits
    return fits


def analytic_oracle(axis: str, theta: float, p: SatelliteParams | None = None) -> float:
    """Rest-to-rest bang-bang time (s) about a principal axis, all rotors saturated.

    ``2 sqrt(theta J_axis / tau_axis)`` with ``tau_axis = sum_i |Ar[axis, i]| u_max``.
    Warns when the half-maneuver time exceeds ``r_max / u_max`` (rotor momentum
    would saturate, so the double-integrator model no longer holds).
    """
    p = p or SatelliteParams()
    i = {"x": 0, "y": 1, "z": 2}.get(axis)
    if i is None:
        raise ValueError("axis must be one of 'x', 'y', 'z'")
    tau = float(np.sum(np.abs(p.Ar[i])) * p.u_max)
    T = 2.0 * math.sqrt(abs(theta) * p.J[i, i] / tau)
    if 0.5 * T > p.r_max / p.u_max:
        warnings.warn(f"{axis}-axis slew of {math.degrees(abs(theta)):.1f} deg saturates "
                      "rotor momentum; oracle is optimistic", RuntimeWarning, stacklevel=2)
    return T


def energy_slope_oracle(a: float, p: SatelliteParams | None = None) -> float:
    """Energy slope ``u_max^2 a^2 / Jr`` (J/rad) implied by a square-root time law."""
    p = p or SatelliteParams()
    return p.u_max ** 2 * a ** 2 / p.Jr


def eigenaxis_coefficient(p: SatelliteParams | None = None, n_axes: int = 2000) -> float:
    """Worst-case ``a`` in ``T = a sqrt(theta)`` for bang-bang eigenaxis slews.

    For each sampled axis ``e`` the rotors give at most
    ``tau(e) = u_max sum_i |Ar_i . e|`` about ``e`` against the inertia
    ``e' J e``; the largest ``2 sqrt(e' J e / tau(e))`` is returned.  It
    ignores gyroscopic coupling and rotor momentum limits, so it is a
    planning model rather than a bound.
    """
    p = p or SatelliteParams()
    E = equidistributed_axes(n_axes)
    inertia = np.einsum("ki,ij,kj->k", E, p.J, E)
    tau = p.u_max * np.abs(E @ p.Ar).sum(axis=1)
    return float(np.max(2.0 * np.sqrt(inertia / tau)))


def power_law_slew_time(a: float, b: float = 0.5) -> Callable:
    """``slew_time(q_from, q_to) = a theta^b`` with ``theta`` the rotation angle (rad)."""
    def slew_time(q_from, q_to) -> float:
        return a * angle_between(q_from, q_to) ** b
    return slew_time
