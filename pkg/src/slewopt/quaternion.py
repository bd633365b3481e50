"""Quaternion and axis-angle utilities.

Convention
----------
Quaternions are stored vector-first, scalar-last::

    q = [q1, q2, q3, q4] = [sin(theta/2) * axis, cos(theta/2)]

Products are Hamilton products in that storage order, so that
``rotation_matrix(a * b) == rotation_matrix(a) @ rotation_matrix(b)``.  With
this convention the body-rate kinematics are ``qdot = 0.5 * Omega(w) @ q`` and
the error quaternion ``conj(q_des) * q`` is the attitude of the body relative
to the desired frame, expressed in the desired frame.

All functions take and return plain ``numpy`` arrays and never mutate their
inputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])

# below this angle the rotation axis is undefined
_AXIS_EPS = 1e-12


class AxisAngle(NamedTuple):
    """Euler axis (unit 3-vector) and rotation angle in radians."""

    axis: np.ndarray
    angle: float


def normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def conjugate(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([-1.0, -1.0, -1.0, 1.0])


def skew(w):
    """3x3 cross-product matrix, ``skew(w) @ v == cross(w, v)``."""
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy],
                     [wz, 0.0, -wx],
                     [-wy, wx, 0.0]])


def omega_matrix(w):
    """4x4 skew matrix of the quaternion kinematics ``qdot = 0.5 * Omega @ q``."""
    wx, wy, wz = w
    return np.array([[0.0, wz, -wy, wx],
                     [-wz, 0.0, wx, wy],
                     [wy, -wx, 0.0, wz],
                     [-wx, -wy, -wz, 0.0]])


def skew_operators(w):
    """Return ``(Omega4, Cross3)`` for the body rate ``w``."""
    return omega_matrix(w), skew(w)


def xi_matrix(q):
    """4x3 matrix with ``omega_matrix(w) @ q == xi_matrix(q) @ w``."""
    q1, q2, q3, q4 = q
    return np.array([[q4, -q3, q2],
                     [q3, q4, -q1],
                     [-q2, q1, q4],
                     [-q1, -q2, -q3]])


def left_matrix(p):
    """4x4 matrix ``L(p)`` such that ``L(p) @ q`` is the Hamilton product p*q."""
    p1, p2, p3, p4 = p
    return np.array([[p4, -p3, p2, p1],
                     [p3, p4, -p1, p2],
                     [-p2, p1, p4, p3],
                     [-p1, -p2, -p3, p4]])


def error_matrix(q_des):
    """4x4 matrix mapping ``q`` to the error quaternion ``conj(q_des) * q``.

    The map is linear in ``q`` for a fixed desired attitude, which is what lets
    the pointing-error terms enter a cone program without linearization.
    """
    d1, d2, d3, d4 = q_des
    return np.array([[d4, d3, -d2, -d1],
                     [-d3, d4, d1, -d2],
                     [d2, -d1, d4, -d3],
                     [d1, d2, d3, d4]])


def hamilton_product(a, b, renormalize: bool = True):
    """Hamilton product ``a * b`` (vector-first storage).

    The result is renormalized unless ``renormalize`` is False, which keeps the
    product exactly bilinear for callers that feed non-unit quaternions.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    av, a4 = a[..., :3], a[..., 3:]
    bv, b4 = b[..., :3], b[..., 3:]
    vec = a4 * bv + b4 * av + np.cross(av, bv)
    sca = a4 * b4 - np.sum(av * bv, axis=-1, keepdims=True)
    out = np.concatenate([vec, sca], axis=-1)
    return normalize(out) if renormalize else out


def error_quaternion(q, q_des):
    """Error quaternion ``conj(q_des) * q``; identity iff q == q_des up to sign."""
    return error_matrix(q_des) @ np.asarray(q, dtype=float)


def positive_scalar(q):
    """Pick the double-cover representative with nonnegative scalar part."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        return -q if q[3] < 0 else q.copy()
    sign = np.where(q[..., 3:] < 0, -1.0, 1.0)
    return q * sign


def rotation_matrix(q):
    """Rotation matrix (body to reference frame) of a unit quaternion."""
    q1, q2, q3, q4 = q
    qv = np.array([q1, q2, q3])
    return ((q4 * q4 - qv @ qv) * np.eye(3) + 2.0 * np.outer(qv, qv)
            + 2.0 * q4 * skew(qv))


def from_rotation_matrix(R):
    """Unit quaternion (scalar part >= 0) of a proper rotation matrix.

    Uses Shepperd's method: pick the largest of the four squared components to
    avoid cancellation.
    """
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    cands = np.array([R[0, 0], R[1, 1], R[2, 2], tr])
    i = int(np.argmax(cands))
    if i == 3:
        q4 = 0.5 * np.sqrt(1.0 + tr)
        f = 0.25 / q4
        q = np.array([(R[2, 1] - R[1, 2]) * f,
                      (R[0, 2] - R[2, 0]) * f,
                      (R[1, 0] - R[0, 1]) * f,
                      q4])
    else:
        j, k = (i + 1) % 3, (i + 2) % 3
        qi = 0.5 * np.sqrt(1.0 + 2.0 * R[i, i] - tr)
        f = 0.25 / qi
        q = np.empty(4)
        q[i] = qi
        q[j] = (R[j, i] + R[i, j]) * f
        q[k] = (R[k, i] + R[i, k]) * f
        q[3] = (R[k, j] - R[j, k]) * f
    return positive_scalar(normalize(q))


def axis_angle_to_quaternion(axis, angle: float):
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        if angle != 0.0:
            raise ValueError("zero rotation axis with nonzero angle")
        return IDENTITY.copy()
    axis = axis / n
    return np.concatenate([np.sin(0.5 * angle) * axis, [np.cos(0.5 * angle)]])


def quaternion_to_axis_angle(q) -> AxisAngle:
    """Axis-angle of ``q`` with the angle in ``[0, pi]``.

    Near the identity (angle below 1e-12 rad) the axis is undefined; the
    returned convention is ``(0, 0, 1)`` with angle 0.
    """
    q = positive_scalar(normalize(q))
    sv = np.linalg.norm(q[:3])
    angle = 2.0 * np.arctan2(sv, q[3])
    if angle < _AXIS_EPS:
        return AxisAngle(np.array([0.0, 0.0, 1.0]), 0.0)
    return AxisAngle(q[:3] / sv, float(angle))


def rotation_vector(q):
    """Axis times angle of ``q`` (shorter-arc representative)."""
    aa = quaternion_to_axis_angle(q)
    return aa.axis * aa.angle


def rotation_vectors(qs):
    """Vectorized ``rotation_vector`` over an (N, 4) array."""
    qs = positive_scalar(normalize(np.atleast_2d(qs)))
    sv = np.linalg.norm(qs[:, :3], axis=1)
    angle = 2.0 * np.arctan2(sv, qs[:, 3])
    # angle/sin(angle/2) -> 2 as angle -> 0
    scale = np.where(sv > _AXIS_EPS, angle / np.where(sv > 0, sv, 1.0), 2.0)
    return qs[:, :3] * scale[:, None]


def angle_between(a, b) -> float:
    """Rotation angle (radians, in [0, pi]) of the relative rotation a -> b."""
    # atan2 form keeps precision for small angles where arccos rounds to zero
    e = hamilton_product(conjugate(normalize(a)), normalize(b), renormalize=False)
    return float(2.0 * np.arctan2(np.linalg.norm(e[:3]), abs(e[3])))


def slerp(q0, q1, t: float):
    """Spherical linear interpolation along the shorter arc.

    For antipodal inputs (the same rotation) the result is ``q0`` for every t,
    which is the only consistent great-circle choice without extra data.
    """
    q0 = normalize(q0)
    q1 = normalize(q1)
    d = float(np.dot(q0, q1))
    if d < 0.0:
        q1 = -q1
        d = -d
    if d > 1.0 - 1e-9:
        # |dot| within 1e-9 of 1: same rotation (including antipodes)
        if d >= 1.0 - 1e-15:
            return q0.copy()
        return normalize((1.0 - t) * q0 + t * q1)
    theta = np.arccos(d)
    s = np.sin(theta)
    return normalize((np.sin((1.0 - t) * theta) * q0 + np.sin(t * theta) * q1) / s)


def equidistributed_axes(n: int):
    """``n`` unit vectors on the golden-spiral (Fibonacci) lattice."""
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)
