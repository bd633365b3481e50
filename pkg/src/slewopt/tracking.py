"""Finite-horizon LQR tracking of a reference attitude trajectory.

Error state (10): ``[phi, dw, dr]`` where ``phi`` is the rotation vector of
the error quaternion ``conj(q_ref) * q``, ``dw = w - w_ref`` and
``dr = r - r_ref``; the error input is ``du = u - u_ref``.  The linear error
model about the reference at node k is discretized with a zero-order hold on
``du`` over the node spacing, and time-varying gains come from the backward
Riccati recursion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .dynamics import IQ, IR, IW, NU, NX, SatelliteParams, dynamics, foh_input
from .quaternion import IDENTITY, error_quaternion, positive_scalar, rotation_vector, skew

NE = 10

# inertia used to study model mismatch in the tracking simulation
J_TILDE = np.array([[15.0, -1.0, 2.0],
                    [-1.0, 7.0, -3.0],
                    [2.0, -3.0, 9.0]])


class RiccatiError(ArithmeticError):
    """``R + B' P B`` lost positive definiteness during the recursion."""


def error_jacobians(w_ref, r_ref, p: SatelliteParams):
    """Continuous error model ``(A_hat, B_hat)`` about a reference rate and momentum."""
    w = np.asarray(w_ref, dtype=float)
    r = np.asarray(r_ref, dtype=float)
    Jinv = np.linalg.inv(p.J)
    Wx = skew(w)
    A = np.zeros((NE, NE))
    A[0:3, 0:3] = -Wx
    A[0:3, 3:6] = np.eye(3)
    A[3:6, 3:6] = -Jinv @ (Wx @ p.J - skew(p.J @ w + p.Ar @ r))
    A[3:6, 6:10] = -Jinv @ Wx @ p.Ar
    return A, error_input_matrix(p)


def error_input_matrix(p: SatelliteParams):
    B = np.zeros((NE, NU))
    B[3:6] = -np.linalg.solve(p.J, p.Ar)
    B[6:10] = np.eye(NU)
    return B


def discretize_zoh(A, B, dt: float):
    """Zero-order-hold discretization via the exponential of ``[[A, B], [0, 0]] dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n, m = B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    E = expm(M * dt)
    return E[:n, :n], E[:n, n:]


@dataclass
class LqrWeights:
    """Stage weight ``Q`` (scaled by ``alpha`` at observation nodes), ``R`` and ``Q_K``."""

    Q: np.ndarray = field(default_factory=lambda: np.diag([10.0] * 3 + [1.0] * 3 + [0.01] * 4))
    R: np.ndarray = field(default_factory=lambda: np.eye(NU))
    alpha: float = 100.0
    Q_K: np.ndarray | None = None

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        self.Q_K = self.Q.copy() if self.Q_K is None else np.atleast_2d(
            np.asarray(self.Q_K, dtype=float))
        if np.linalg.eigvalsh(0.5 * (self.Q + self.Q.T)).min() < -1e-12:
            raise ValueError("Q must be positive semidefinite")
        if np.linalg.eigvalsh(0.5 * (self.R + self.R.T)).min() <= 0:
            raise ValueError("R must be positive definite")
        if np.linalg.eigvalsh(0.5 * (self.Q_K + self.Q_K.T)).min() < -1e-12:
            raise ValueError("Q_K must be positive semidefinite")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass
class GainSchedule:
    """Feedback gains ``K[k]`` (``du_k = -K[k] dx_k``) and cost-to-go matrices ``P``."""

    K: np.ndarray
    P: np.ndarray
    dt: float

    @property
    def horizon(self) -> int:
        return self.P.shape[0]

    def cost(self, x0) -> float:
        """Optimal cost from the initial error ``x0``."""
        x0 = np.asarray(x0, dtype=float)
        return float(x0 @ self.P[0] @ x0)


def riccati_gains(ltv, w: LqrWeights, obs_nodes=(), dt: float = 1.0) -> GainSchedule:
    """Backward Riccati recursion over ``ltv = [(A_0, B_0), ..., (A_{N-1}, B_{N-1})]``.

    Minimizes ``x_N' Q_K x_N + sum_k (x_k' Q_k x_k + u_k' R u_k)`` with
    ``Q_k = alpha Q`` for ``k`` in ``obs_nodes`` (0-based) and ``Q`` otherwise.
    The Joseph form is used and each ``P_k`` is symmetrized.
    """
    N = len(ltv)
    if N < 1:
        raise ValueError("horizon must have at least two nodes")
    obs = set(int(k) for k in obs_nodes)
    n = ltv[0][0].shape[0]
    m = ltv[0][1].shape[1]
    P = np.empty((N + 1, n, n))
    K = np.empty((N, m, n))
    P[N] = w.Q_K
    for k in range(N - 1, -1, -1):
        A, B = ltv[k]
        Pn = P[k + 1]
        S = w.R + B.T @ Pn @ B
        try:
            L = np.linalg.cholesky(0.5 * (S + S.T))
        except np.linalg.LinAlgError:
            raise RiccatiError(f"R + B'PB is not positive definite at step {k}") from None
        Kk = np.linalg.solve(L.T, np.linalg.solve(L, B.T @ Pn @ A))
        Acl = A - B @ Kk
        Qk = w.alpha * w.Q if k in obs else w.Q
        Pk = Kk.T @ w.R @ Kk + Acl.T @ Pn @ Acl + Qk
        P[k] = 0.5 * (Pk + Pk.T)
        K[k] = Kk
    return GainSchedule(K, P, dt)


def reference_ltv(t_nodes, X_ref, p: SatelliteParams):
    """ZOH error models about each reference node, one per interval."""
    t_nodes = np.asarray(t_nodes, dtype=float)
    out = []
    for k in range(len(t_nodes) - 1):
        A, B = error_jacobians(X_ref[k, IW], X_ref[k, IR], p)
        out.append(discretize_zoh(A, B, t_nodes[k + 1] - t_nodes[k]))
    return out


def design_tracker(t_nodes, X_ref, p: SatelliteParams, weights: LqrWeights | None = None,
                   obs_nodes=()) -> GainSchedule:
    """Gains for tracking ``X_ref`` sampled at ``t_nodes`` with the nominal model."""
    weights = weights or LqrWeights()
    t_nodes = np.asarray(t_nodes, dtype=float)
    dt = float(t_nodes[1] - t_nodes[0]) if len(t_nodes) > 1 else 1.0
    return riccati_gains(reference_ltv(t_nodes, X_ref, p), weights, obs_nodes, dt)


def error_state(x, x_ref):
    """``[phi, dw, dr]`` of ``x`` relative to ``x_ref`` (shorter-arc rotation vector)."""
    phi = rotation_vector(error_quaternion(x[IQ], x_ref[IQ]))
    return np.concatenate([phi, x[IW] - x_ref[IW], x[IR] - x_ref[IR]])


@dataclass
class SimResult:
    mode: str
    t: np.ndarray
    X: np.ndarray
    U: np.ndarray


def simulate(t_nodes, X_ref, U_ref, p_true: SatelliteParams, mode: str = "closed_loop",
             gains: GainSchedule | None = None, x0=None, substeps: int = 10) -> SimResult:
    """Integrate the nonlinear dynamics of ``p_true`` along the reference.

    ``open_loop`` applies the linearly interpolated reference torques;
    ``closed_loop`` adds ``-K_k dx_k``, held over each interval.  Commands
    are clamped to the torque limit.  Returns node states and the torques
    applied at the start of each interval.
    """
    if mode not in ("open_loop", "closed_loop"):
        raise ValueError("mode must be 'open_loop' or 'closed_loop'")
    t_nodes = np.asarray(t_nodes, dtype=float)
    X_ref = np.asarray(X_ref, dtype=float)
    U_ref = np.asarray(U_ref, dtype=float)
    K = len(t_nodes)
    if mode == "closed_loop":
        if gains is None:
            raise ValueError("closed-loop simulation needs gains")
        if gains.horizon != K:
            raise ValueError(f"gain horizon {gains.horizon} does not match {K} nodes")
    u_ref = foh_input(t_nodes, U_ref)
    x = X_ref[0].copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    X = np.empty((K, NX))
    U = np.zeros((K, NU))
    X[0] = x
    umax = p_true.u_max
    for k in range(K - 1):
        du = np.zeros(NU)
        if mode == "closed_loop":
            du = -gains.K[k] @ error_state(x, X_ref[k])
        t0, t1 = t_nodes[k], t_nodes[k + 1]
        h = (t1 - t0) / substeps

        def u_of(t):
            return np.clip(u_ref(t) + du, -umax, umax)

        U[k] = u_of(t0)
        for i in range(substeps):
            ti = t0 + i * h
            k1 = dynamics(x, u_of(ti), p_true)
            k2 = dynamics(x + 0.5 * h * k1, u_of(ti + 0.5 * h), p_true)
            k3 = dynamics(x + 0.5 * h * k2, u_of(ti + 0.5 * h), p_true)
            k4 = dynamics(x + h * k3, u_of(ti + h), p_true)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            x[IQ] /= np.linalg.norm(x[IQ])
        X[k + 1] = x
    U[-1] = np.clip(U_ref[-1], -umax, umax)
    return SimResult(mode, t_nodes.copy(), X, U)


@dataclass
class ErrorMetrics:
    q_e_max: float
    q_e_avg: float
    w_e_max: float
    w_e_avg: float

    def to_dict(self, **extra) -> dict:
        d = {"q_e_max": self.q_e_max, "q_e_avg": self.q_e_avg,
             "w_e_max": self.w_e_max, "w_e_avg": self.w_e_avg}
        d.update(extra)
        return d

    def dumps(self, **extra) -> str:
        return json.dumps(self.to_dict(**extra), indent=1)


def quaternion_errors(Q, Q_des):
    """``|| conj(q_des) * q - q_I ||`` row by row, scalar part made nonnegative."""
    Q = np.atleast_2d(Q)
    Q_des = np.atleast_2d(Q_des)
    return np.array([np.linalg.norm(positive_scalar(error_quaternion(q, qd)) - IDENTITY)
                     for q, qd in zip(Q, Q_des)])


def error_metrics(X, q_nodes, q_des, w_nodes=None, w_des=None) -> ErrorMetrics:
    """Max and mean attitude and rate errors of ``X`` at the given nodes."""
    X = np.asarray(X, dtype=float)
    q_nodes = np.asarray(q_nodes, dtype=int).reshape(-1)
    if q_nodes.size == 0:
        raise ValueError("empty observation set")
    qe = quaternion_errors(X[q_nodes, IQ], np.asarray(q_des, dtype=float).reshape(-1, 4))
    if w_nodes is None or len(w_nodes) == 0:
        we = np.zeros(1)
    else:
        w_nodes = np.asarray(w_nodes, dtype=int).reshape(-1)
        we = np.linalg.norm(X[w_nodes, IW] - np.asarray(w_des, dtype=float).reshape(-1, 3),
                            axis=1)
    return ErrorMetrics(float(qe.max()), float(qe.mean()), float(we.max()), float(we.mean()))


def schedule_metrics(X, spec) -> ErrorMetrics:
    """Errors of ``X`` against a :class:`PointingScheduleSpec`."""
    return error_metrics(X, spec.q_nodes, spec.q_des, spec.w_nodes, spec.w_des)


def reference_metrics(X, X_ref, q_nodes, w_nodes=None) -> ErrorMetrics:
    """Errors of a simulated ``X`` against the reference trajectory at the given nodes."""
    q_nodes = np.asarray(q_nodes, dtype=int).reshape(-1)
    w_nodes = q_nodes if w_nodes is None else np.asarray(w_nodes, dtype=int).reshape(-1)
    return error_metrics(X, q_nodes, X_ref[q_nodes, IQ], w_nodes, X_ref[w_nodes, IW])
