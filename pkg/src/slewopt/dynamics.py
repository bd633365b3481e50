"""Gyrostat equations of motion, Jacobians, integration and ADCS power.

State layout (11): ``[q1 q2 q3 q4, wx wy wz, r1 r2 r3 r4]`` with the
quaternion vector-first, body rates in rad/s and rotor momenta in N m s.
Input layout (4): rotor torques in N m.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import quaternion as quat

NX = 11
NU = 4
IQ = slice(0, 4)
IW = slice(4, 7)
IR = slice(7, 11)

TRAJECTORY_COLUMNS = ["t", "q1", "q2", "q3", "q4", "wx", "wy", "wz",
                      "r1", "r2", "r3", "r4", "u1", "u2", "u3", "u4",
                      "power_w", "energy_j"]


@dataclass(frozen=True, eq=False)
class SatelliteParams:
    """Rigid-body and actuator parameters of a rotor-actuated satellite.

    The defaults are the reference satellite: 8.5/8.5/6.0 kg m^2 principal
    inertia, four rotors with 0.8 N m s momentum and 0.06 N m torque limits.
    ``Jr`` is not part of the reference data; 0.0096 kg m^2 reproduces the
    reference energy slope for x/y principal-axis slews.
    """

    J: np.ndarray = field(default_factory=lambda: np.diag([8.5, 8.5, 6.0]))
    Ar: np.ndarray = field(default_factory=lambda: np.array(
        [[-0.68, 0.68, 0.68, -0.68],
         [-0.68, -0.68, 0.68, 0.68],
         [0.26, 0.26, 0.26, 0.26]]))
    r_max: float = 0.80
    u_max: float = 0.06
    Jr: float = 0.0096
    P_max: float | None = None
    E_max: float | None = None

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        Ar = np.array(self.Ar, dtype=float)
        if J.shape != (3, 3) or not np.allclose(J, J.T, rtol=0, atol=1e-12):
            raise ValueError("J must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(J).min() <= 0.0:
            raise ValueError("J must be positive definite")
        if Ar.shape != (3, 4):
            raise ValueError("Ar must be 3x4")
        if np.any(np.abs(np.linalg.norm(Ar, axis=0) - 1.0) > 1e-2):
            # Table-style data is rounded to two digits (0.68^2*2 + 0.26^2 = 0.9924)
            raise ValueError("columns of Ar must be (approximately) unit vectors")
        if not (self.r_max > 0 and self.u_max > 0 and self.Jr > 0):
            raise ValueError("r_max, u_max and Jr must be positive")
        J.setflags(write=False)
        Ar.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "Ar", Ar)
        Jinv = np.linalg.inv(J)
        Jinv.setflags(write=False)
        object.__setattr__(self, "Jinv", Jinv)

    def with_inertia(self, J) -> "SatelliteParams":
        return replace(self, J=np.asarray(J, dtype=float))

    def to_dict(self) -> dict:
        return {"J": self.J.tolist(), "Ar": self.Ar.tolist(),
                "r_max": self.r_max, "u_max": self.u_max, "Jr": self.Jr,
                "P_max": self.P_max, "E_max": self.E_max}

    @classmethod
    def from_dict(cls, d: dict) -> "SatelliteParams":
        known = {"J", "Ar", "r_max", "u_max", "Jr", "P_max", "E_max"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown satellite parameter(s): {sorted(unknown)}")
        kw = dict(d)
        for key in ("J", "Ar"):
            if key in kw:
                kw[key] = np.asarray(kw[key], dtype=float)
        return cls(**kw)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def principal_torque_authority(self):
        """Max body torque about each principal axis with all rotors saturated.

        Returns ``(inertias, axes, torques)`` with axes as columns.
        """
        lam, vec = np.linalg.eigh(self.J)
        torques = np.abs(vec.T @ self.Ar).sum(axis=1) * self.u_max
        return lam, vec, torques


def make_state(q=None, w=None, r=None):
    x = np.zeros(NX)
    x[IQ] = quat.IDENTITY if q is None else q
    if w is not None:
        x[IW] = w
    if r is not None:
        x[IR] = r
    return x


def dynamics(x, u, p: SatelliteParams):
    """Time derivative of the gyrostat state."""
    q, w, r = x[IQ], x[IW], x[IR]
    h = p.J @ w + p.Ar @ r
    xdot = np.empty(NX)
    xdot[IQ] = 0.5 * quat.omega_matrix(w) @ q
    xdot[IW] = -p.Jinv @ (np.cross(w, h) + p.Ar @ u)
    xdot[IR] = u
    return xdot


def dynamics_batch(x, u, p: SatelliteParams):
    """``dynamics`` over leading batch dimension: x (N, 11), u (N, 4)."""
    q, w, r = x[:, IQ], x[:, IW], x[:, IR]
    h = w @ p.J.T + r @ p.Ar.T
    xdot = np.empty_like(x)
    q1, q2, q3, q4 = q.T
    wx, wy, wz = w.T
    xdot[:, 0] = 0.5 * (wz * q2 - wy * q3 + wx * q4)
    xdot[:, 1] = 0.5 * (-wz * q1 + wx * q3 + wy * q4)
    xdot[:, 2] = 0.5 * (wy * q1 - wx * q2 + wz * q4)
    xdot[:, 3] = 0.5 * (-wx * q1 - wy * q2 - wz * q3)
    xdot[:, IW] = -(np.cross(w, h) + u @ p.Ar.T) @ p.Jinv.T
    xdot[:, IR] = u
    return xdot


def _skew_batch(v):
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1] = -v[..., 2]
    S[..., 0, 2] = v[..., 1]
    S[..., 1, 0] = v[..., 2]
    S[..., 1, 2] = -v[..., 0]
    S[..., 2, 0] = -v[..., 1]
    S[..., 2, 1] = v[..., 0]
    return S


def jacobians_batch(x, p: SatelliteParams):
    """Analytic df/dx (N, 11, 11) and df/du (11, 4) of the unscaled dynamics."""
    n = x.shape[0]
    q, w, r = x[:, IQ], x[:, IW], x[:, IR]
    q1, q2, q3, q4 = q.T
    wx, wy, wz = w.T
    A = np.zeros((n, NX, NX))
    # 0.5 * Omega(w)
    A[:, 0, 1], A[:, 0, 2], A[:, 0, 3] = 0.5 * wz, -0.5 * wy, 0.5 * wx
    A[:, 1, 0], A[:, 1, 2], A[:, 1, 3] = -0.5 * wz, 0.5 * wx, 0.5 * wy
    A[:, 2, 0], A[:, 2, 1], A[:, 2, 3] = 0.5 * wy, -0.5 * wx, 0.5 * wz
    A[:, 3, 0], A[:, 3, 1], A[:, 3, 2] = -0.5 * wx, -0.5 * wy, -0.5 * wz
    # 0.5 * Xi(q)
    xi = np.stack([np.stack([q4, -q3, q2], -1),
                   np.stack([q3, q4, -q1], -1),
                   np.stack([-q2, q1, q4], -1),
                   np.stack([-q1, -q2, -q3], -1)], axis=1)
    A[:, IQ, IW] = 0.5 * xi
    h = w @ p.J.T + r @ p.Ar.T
    Sw = _skew_batch(w)
    Sh = _skew_batch(h)
    A[:, IW, IW] = -p.Jinv @ (Sw @ p.J - Sh)
    A[:, IW, IR] = -p.Jinv @ (Sw @ p.Ar)
    B = np.zeros((NX, NU))
    B[IW, :] = -p.Jinv @ p.Ar
    B[IR, :] = np.eye(NU)
    return A, B


def normalized_jacobians(x_bar, u_bar, tf_bar: float, p: SatelliteParams):
    """Linearization of ``F(x, u, tf) = tf * f(x, u)`` about a nominal point.

    Returns ``(A, B, Sigma, e)`` so that
    ``F(x, u, tf) ~= A x + B u + Sigma tf + e`` with equality at the nominal.
    """
    if tf_bar <= 0:
        raise ValueError("tf_bar must be positive")
    x_bar = np.asarray(x_bar, dtype=float)
    u_bar = np.asarray(u_bar, dtype=float)
    Af, Bf = jacobians_batch(x_bar[None], p)
    A = tf_bar * Af[0]
    B = tf_bar * Bf
    Sigma = dynamics(x_bar, u_bar, p)
    e = -(A @ x_bar + B @ u_bar)
    return A, B, Sigma, e


def foh_input(t_nodes, u_nodes):
    """Piecewise-linear input signal through ``(t_nodes, u_nodes)``."""
    t_nodes = np.asarray(t_nodes, dtype=float)
    u_nodes = np.asarray(u_nodes, dtype=float)

    def u_of_t(t):
        return np.array([np.interp(t, t_nodes, u_nodes[:, i])
                         for i in range(u_nodes.shape[1])])
    return u_of_t


class IntegrationError(RuntimeError):
    pass


def rk4_integrate(x0, u_of_t, t0: float, tf: float, steps: int,
                  p: SatelliteParams):
    """Fixed-step classical RK4 with quaternion renormalization per step.

    Returns ``(t, X)`` with ``steps + 1`` uniform samples including both ends.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not tf > t0:
        raise ValueError("tf must exceed t0")
    h = (tf - t0) / steps
    t = t0 + h * np.arange(steps + 1)
    X = np.empty((steps + 1, NX))
    x = np.array(x0, dtype=float)
    X[0] = x
    for i in range(steps):
        ti = t[i]
        u0 = u_of_t(ti)
        um = u_of_t(ti + 0.5 * h)
        u1 = u_of_t(ti + h)
        k1 = dynamics(x, u0, p)
        k2 = dynamics(x + 0.5 * h * k1, um, p)
        k3 = dynamics(x + 0.5 * h * k2, um, p)
        k4 = dynamics(x + h * k3, u1, p)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at t = {ti + h:.6g} s")
        x[IQ] /= np.linalg.norm(x[IQ])
        X[i + 1] = x
    return t, X


def replay(x0, t_nodes, u_nodes, p: SatelliteParams, substeps: int = 10):
    """Integrate the nonlinear dynamics under the FOH input through the nodes.

    Returns dense samples ``(t, X, U)``; node k sits at index ``k * substeps``.
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    u_nodes = np.asarray(u_nodes, dtype=float)
    n_int = len(t_nodes) - 1
    u_of_t = foh_input(t_nodes, u_nodes)
    ts = [t_nodes[:1]]
    Xs = [np.asarray(x0, dtype=float)[None]]
    x = np.asarray(x0, dtype=float)
    for k in range(n_int):
        t, X = rk4_integrate(x, u_of_t, t_nodes[k], t_nodes[k + 1], substeps, p)
        ts.append(t[1:])
        Xs.append(X[1:])
        x = X[-1]
    t = np.concatenate(ts)
    X = np.concatenate(Xs)
    U = np.array([u_of_t(ti) for ti in t])
    return t, X, U


def instantaneous_power(x, u, p: SatelliteParams):
    """ADCS power draw ``sum_i |u_i r_i / Jr|`` in W; vectorized over rows."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    r = x[..., IR]
    return np.sum(np.abs(u * r), axis=-1) / p.Jr


def cumulative_energy(t, power):
    """Trapezoidal running integral of power in J (same length as ``t``)."""
    t = np.asarray(t, dtype=float)
    power = np.asarray(power, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two samples to integrate energy")
    if np.any(np.diff(t) < 0):
        raise ValueError("samples must be time-ordered")
    inc = 0.5 * (power[1:] + power[:-1]) * np.diff(t)
    return np.concatenate([[0.0], np.cumsum(inc)])


def trajectory_table(t, X, U, p: SatelliteParams):
    """Stack a trajectory into the CSV column layout (see TRAJECTORY_COLUMNS)."""
    power = instantaneous_power(X, U, p)
    energy = cumulative_energy(t, power)
    return np.column_stack([t, X, U, power, energy])


def write_trajectory_csv(path, t, X, U, p: SatelliteParams):
    table = trajectory_table(t, X, U, p)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in table:
            writer.writerow([repr(float(v)) for v in row])


def read_trajectory_csv(path):
    """Read a trajectory CSV back as ``(t, X, U)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRAJECTORY_COLUMNS:
            raise ValueError(f"{path}: unexpected trajectory columns {header}")
        data = np.array([[float(v) for v in row] for row in reader])
    return data[:, 0], data[:, 1:12], data[:, 12:16]
