"""Discrete convex subproblems for the two attitude planning problems.

Time is normalized to ``tau = t / t_f`` on a uniform grid of ``K`` nodes.
Inputs are first-order hold (piecewise linear) between nodes, and the
dynamics linearized about a nominal trajectory are discretized exactly:

    x[k+1] = A[k] x[k] + Bm[k] u[k] + Bp[k] u[k+1] + S[k] t_f + e[k] + v[k]

where ``v`` is a heavily penalized virtual control.  Each interval is
integrated from the nominal node (multiple shooting).

Two assemblers turn a nominal trajectory into a :class:`ConeProgram`:

``assemble_min_time``
    minimum final time, rest-to-rest (variables x, u, t_f).
``assemble_multi_target``
    fixed final time, pointing-error plus control-effort objective.

Variable layout of the assembled programs (``ConeProgram.layout``), with
states and inputs in scaled units (see :class:`ScalingMap`)::

    x    (K, 11)     scaled states
    u    (K, 4)      scaled rotor torques
    tf   (1,)        scaled final time              (min-time only)
    vp   (K-1, 11)   positive part of virtual control (scaled state units)
    vm   (K-1, 11)   negative part of virtual control
    eta  (K,)        trust-region epigraph variables
    xi   (|Kq|,)     quaternion-error epigraphs     (multi-target only)
    psi  (|Kw|,)     rate-error epigraphs           (multi-target only)
    zeta (K,)        control-effort epigraphs       (multi-target only)

For K=30 the min-time program therefore has 30*15 + 1 = 451 trajectory
variables plus 2*29*11 + 30 = 668 slacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .conic import ConeDims, ConeProgram
from .dynamics import (IQ, IR, IW, NU, NX, IntegrationError, SatelliteParams,
                       dynamics_batch, jacobians_batch)
from .quaternion import error_matrix

NZ = NX + NU  # per-node trajectory variables, t_f excluded
Q_IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])

# |u_i r_i| is treated as having zero gradient below this product
POWER_DEAD_ZONE = 1e-9


def _squared(cfg) -> bool:
    mode = getattr(cfg, "trust_region", "norm")
    if mode not in ("norm", "squared"):
        raise ValueError(f"unknown trust_region mode {mode!r}")
    return mode == "squared"


def _finite(v) -> bool:
    return v is not None and bool(np.isfinite(v))


# --------------------------------------------------------------------------
# decision variables and scaling
# --------------------------------------------------------------------------

@dataclass
class DecisionStack:
    """Node states ``X`` (K, 11), inputs ``U`` (K, 4), final time and slacks.

    ``V`` holds the virtual controls (K-1, 11) in scaled state units; it is
    zero for trajectories that did not come out of a subproblem.
    """

    X: np.ndarray
    U: np.ndarray
    tf: float
    V: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.array(self.X, dtype=float)
        self.U = np.array(self.U, dtype=float)
        self.tf = float(self.tf)
        if self.X.ndim != 2 or self.X.shape[1] != NX:
            raise ValueError(f"X must be (K, {NX}), got {self.X.shape}")
        if self.U.shape != (self.X.shape[0], NU):
            raise ValueError(f"U must be ({self.X.shape[0]}, {NU}), got {self.U.shape}")
        if self.V is None:
            self.V = np.zeros((self.K - 1, NX))
        else:
            self.V = np.array(self.V, dtype=float).reshape(self.K - 1, NX)

    @property
    def K(self) -> int:
        return self.X.shape[0]

    @property
    def times(self):
        return np.linspace(0.0, self.tf, self.K)

    def nodes(self):
        """(K, 16) array of ``z_k = [x_k, u_k, t_f]``."""
        return np.column_stack([self.X, self.U, np.full(self.K, self.tf)])

    @classmethod
    def from_nodes(cls, Z, V=None) -> "DecisionStack":
        Z = np.asarray(Z, dtype=float)
        return cls(Z[:, :NX], Z[:, NX:NZ], float(Z[0, NZ]), V)

    def copy(self) -> "DecisionStack":
        return DecisionStack(self.X.copy(), self.U.copy(), self.tf, self.V.copy())


@dataclass(frozen=True)
class ScalingMap:
    """Affine map ``physical = scale * scaled + offset`` on ``[x, u, t_f]``."""

    scale: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        scale = np.asarray(self.scale, dtype=float)
        offset = np.asarray(self.offset, dtype=float)
        if scale.shape != (NZ + 1,) or offset.shape != (NZ + 1,):
            raise ValueError(f"scale and offset must have length {NZ + 1}")
        if not np.all(scale > 0):
            raise ValueError("scales must be strictly positive")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "offset", offset)

    @classmethod
    def identity(cls) -> "ScalingMap":
        return cls(np.ones(NZ + 1), np.zeros(NZ + 1))

    @classmethod
    def from_params(cls, p: SatelliteParams, t_ref: float) -> "ScalingMap":
        """Quaternions unscaled, rates by r_max/J_min, momenta by r_max,
        torques by u_max and time by ``t_ref``."""
        w_ref = p.r_max / np.linalg.eigvalsh(p.J)[0]
        scale = np.concatenate([np.ones(4), np.full(3, w_ref), np.full(4, p.r_max),
                                np.full(NU, p.u_max), [t_ref]])
        return cls(scale, np.zeros(NZ + 1))

    @property
    def sx(self):
        return self.scale[:NX]

    @property
    def su(self):
        return self.scale[NX:NZ]

    @property
    def stf(self) -> float:
        return float(self.scale[NZ])

    def to_scaled(self, Z):
        return (np.asarray(Z, dtype=float) - self.offset) / self.scale

    def to_physical(self, Zs):
        return np.asarray(Zs, dtype=float) * self.scale + self.offset


def scale(stack: DecisionStack, smap: ScalingMap) -> DecisionStack:
    """Map a physical stack to solver units (virtual controls are unchanged)."""
    return DecisionStack.from_nodes(smap.to_scaled(stack.nodes()), stack.V.copy())


def unscale(stack: DecisionStack, smap: ScalingMap) -> DecisionStack:
    return DecisionStack.from_nodes(smap.to_physical(stack.nodes()), stack.V.copy())


# --------------------------------------------------------------------------
# FOH discretization
# --------------------------------------------------------------------------

@dataclass
class DiscreteLtvSystem:
    """Exact FOH discretization about a nominal trajectory.

    All arrays are stacked over the K-1 intervals.  ``x_prop`` is the
    nonlinear propagation of each nominal node to the end of its interval.
    """

    A: np.ndarray        # (K-1, 11, 11)
    Bm: np.ndarray       # (K-1, 11, 4)
    Bp: np.ndarray       # (K-1, 11, 4)
    S: np.ndarray        # (K-1, 11)
    e: np.ndarray        # (K-1, 11)
    tau: np.ndarray      # (K,)
    x_prop: np.ndarray   # (K-1, 11)

    @property
    def K(self) -> int:
        return self.tau.size

    def propagate(self, X, U, tf):
        """Right-hand side of the discrete dynamics for every interval."""
        X = np.asarray(X)
        U = np.asarray(U)
        return (np.einsum("kij,kj->ki", self.A, X[:-1])
                + np.einsum("kij,kj->ki", self.Bm, U[:-1])
                + np.einsum("kij,kj->ki", self.Bp, U[1:])
                + self.S * tf + self.e)


def _foh_integrate(x0, u0, u1, tf, dtau, model, substeps):
    """RK4 on the state and its sensitivities over one interval per row.

    ``model(x, u)`` returns ``(f, dfdx, dfdu)`` batched over rows; ``dfdu`` may
    be a single (n, m) matrix shared by all rows.
    """
    N, n = x0.shape
    m = u0.shape[1]
    h = dtau / substeps

    def rhs(s, state):
        x, Phi, Bm, Bp, S = state
        lp = s / dtau
        lm = 1.0 - lp
        u = lm * u0 + lp * u1
        f, Ax, Bu = model(x, u)
        A = tf * Ax
        B = tf * Bu
        AB = np.broadcast_to(B, (N, n, m))
        return (tf * f, A @ Phi, A @ Bm + lm * AB, A @ Bp + lp * AB,
                np.einsum("kij,kj->ki", A, S) + f)

    state = (x0.copy(), np.broadcast_to(np.eye(n), (N, n, n)).copy(),
             np.zeros((N, n, m)), np.zeros((N, n, m)), np.zeros((N, n)))
    for i in range(substeps):
        s = i * h
        k1 = rhs(s, state)
        k2 = rhs(s + 0.5 * h, tuple(a + 0.5 * h * b for a, b in zip(state, k1)))
        k3 = rhs(s + 0.5 * h, tuple(a + 0.5 * h * b for a, b in zip(state, k2)))
        k4 = rhs(s + h, tuple(a + h * b for a, b in zip(state, k3)))
        state = tuple(a + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                      for a, b1, b2, b3, b4 in zip(state, k1, k2, k3, k4))
    return state


def discretize_foh(nominal: DecisionStack, p: SatelliteParams,
                   substeps: int = 10, model=None) -> DiscreteLtvSystem:
    """Exact FOH discretization of the linearized dynamics about ``nominal``.

    The state transition matrix and the input/time sensitivities are
    integrated as forward variational equations, which gives the same
    matrices as the convolution integrals without inverting the transition
    matrix.  ``model`` overrides the gyrostat (used for LTI oracles).
    """
    K = nominal.K
    if K < 2:
        raise ValueError("need at least two nodes")
    if nominal.tf <= 0:
        raise ValueError("nominal final time must be positive")
    if model is None:
        def model(x, u):
            A, B = jacobians_batch(x, p)
            return dynamics_batch(x, u, p), A, B
    tau = np.linspace(0.0, 1.0, K)
    dtau = 1.0 / (K - 1)
    X, U, tf = nominal.X, nominal.U, nominal.tf
    xe, Phi, Bm, Bp, S = _foh_integrate(X[:-1], U[:-1], U[1:], tf, dtau, model, substeps)
    bad = ~(np.isfinite(xe).all(axis=1) & np.isfinite(Phi).all(axis=(1, 2))
            & np.isfinite(Bm).all(axis=(1, 2)) & np.isfinite(Bp).all(axis=(1, 2))
            & np.isfinite(S).all(axis=1))
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise IntegrationError(f"non-finite discretization on interval {k}")
    e = (xe - np.einsum("kij,kj->ki", Phi, X[:-1]) - np.einsum("kij,kj->ki", Bm, U[:-1])
         - np.einsum("kij,kj->ki", Bp, U[1:]) - S * tf)
    return DiscreteLtvSystem(Phi, Bm, Bp, S, e, tau, xe)


# --------------------------------------------------------------------------
# schedule, auxiliary rows
# --------------------------------------------------------------------------

@dataclass
class PointingScheduleSpec:
    """Node-indexed pointing targets for the multi-target problem.

    ``q_nodes``/``q_des`` give desired attitudes and ``w_nodes``/``w_des``
    desired body rates; node indices are 0-based.  The two sets may differ,
    e.g. zero-rate requests on the samples flanking each observation.
    """

    q_nodes: np.ndarray
    q_des: np.ndarray
    w_nodes: np.ndarray
    w_des: np.ndarray
    t_f: float
    gamma: float = 1e5
    rho: float = 1.0

    def __post_init__(self):
        self.q_nodes = np.asarray(self.q_nodes, dtype=int).reshape(-1)
        self.q_des = np.asarray(self.q_des, dtype=float).reshape(-1, 4)
        self.w_nodes = np.asarray(self.w_nodes, dtype=int).reshape(-1)
        self.w_des = np.asarray(self.w_des, dtype=float).reshape(-1, 3)
        if self.q_nodes.size + self.w_nodes.size == 0:
            raise ValueError("empty observation set")
        if self.q_des.shape[0] != self.q_nodes.size or self.w_des.shape[0] != self.w_nodes.size:
            raise ValueError("node and target arrays differ in length")
        if self.q_des.size and np.max(np.abs(np.linalg.norm(self.q_des, axis=1) - 1.0)) > 1e-9:
            raise ValueError("desired quaternions must be unit-norm")
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")

    def check_nodes(self, K: int):
        for name, nodes in (("q_nodes", self.q_nodes), ("w_nodes", self.w_nodes)):
            if nodes.size and (nodes.min() < 0 or nodes.max() >= K):
                raise ValueError(f"{name} has an index outside 0..{K - 1}")


@dataclass
class LinearRows:
    """Rows ``G @ z + offset <= bound`` over the physical stack.

    The stack is ``[X.ravel(), U.ravel(), t_f]`` (length 15K + 1).
    """

    G: sp.csr_matrix
    offset: np.ndarray
    bound: np.ndarray
    labels: list = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return self.G.shape[0]

    def value(self, stack: DecisionStack):
        return self.G @ physical_vector(stack) + self.offset


def physical_vector(stack: DecisionStack):
    return np.concatenate([stack.X.ravel(), stack.U.ravel(), [stack.tf]])


def convexify_power_energy(nominal: DecisionStack, p: SatelliteParams,
                           fixed_tf: bool = False) -> LinearRows:
    """Linearized rotor power (per node) and total energy rows.

    Power ``sum_i |u_i r_i| / Jr`` is expanded to first order about the
    nominal using ``sign(u_i r_i)``, with a dead zone of 1e-9 on the product
    where the sign is taken as zero.  Energy is the node sum
    ``t_f / (K - 1) * sum_k P_k``, linearized in the states, inputs and (for
    free final time) ``t_f``.  Rows with no first-order terms are omitted.
    """
    K = nominal.K
    n = K * NZ + 1
    X, U, tf = nominal.X, nominal.U, nominal.tf
    R = X[:, IR]
    prod = U * R
    sgn = np.where(np.abs(prod) > POWER_DEAD_ZONE, np.sign(prod), 0.0)
    P_bar = np.sum(np.abs(prod), axis=1) / p.Jr

    rows, cols, vals = [], [], []
    offsets, bounds, labels = [], [], []
    r_cols = np.arange(K)[:, None] * NX + IR.start + np.arange(NU)[None, :]
    u_cols = K * NX + np.arange(K)[:, None] * NU + np.arange(NU)[None, :]
    # gradient of P_k: d/du_i = s_i r_i / Jr, d/dr_i = s_i u_i / Jr
    gu = sgn * R / p.Jr
    gr = sgn * U / p.Jr
    g_dot_bar = np.sum(gu * U + gr * R, axis=1)

    if _finite(p.P_max):
        r = 0
        for k in range(K):
            nz = sgn[k] != 0
            if not np.any(nz):
                continue
            cc = np.concatenate([u_cols[k, nz], r_cols[k, nz]])
            vv = np.concatenate([gu[k, nz], gr[k, nz]])
            rows.extend([r] * cc.size)
            cols.extend(cc.tolist())
            vals.extend(vv.tolist())
            offsets.append(P_bar[k] - g_dot_bar[k])
            bounds.append(p.P_max)
            labels.append(f"power[{k}]")
            r += 1
    if _finite(p.E_max) and np.any(sgn != 0):
        r = len(offsets)
        w = tf / (K - 1)
        cc = np.concatenate([u_cols.ravel(), r_cols.ravel()])
        vv = w * np.concatenate([gu.ravel(), gr.ravel()])
        keep = vv != 0
        cc, vv = cc[keep], vv[keep]
        E_bar = w * P_bar.sum()
        const = E_bar - w * g_dot_bar.sum()
        if not fixed_tf:
            cc = np.append(cc, K * NZ)
            vv = np.append(vv, P_bar.sum() / (K - 1))
            const -= P_bar.sum() / (K - 1) * tf
        rows.extend([r] * cc.size)
        cols.extend(cc.tolist())
        vals.extend(vv.tolist())
        offsets.append(const)
        bounds.append(p.E_max)
        labels.append("energy")
    G = sp.csr_matrix((vals, (rows, cols)), shape=(len(offsets), n))
    return LinearRows(G, np.array(offsets), np.array(bounds), labels)


@dataclass(frozen=True)
class SocRow:
    """Hard tolerance ``|| M y + m || <= bound`` on node ``k``'s quaternion
    (``kind == "q"``) or body rate (``kind == "w"``), in physical units."""

    k: int
    kind: str
    M: np.ndarray
    m: np.ndarray
    bound: float


def constraint_formulation_rows(spec: PointingScheduleSpec, eps_q: float,
                                eps_w: float) -> list[SocRow]:
    """Pointing tolerances as hard cone constraints.

    Each finite tolerance replaces the matching objective term; an infinite
    tolerance emits nothing and the penalty term stays in place.
    """
    if eps_q < 0 or eps_w < 0:
        raise ValueError("tolerances must be nonnegative")
    out = []
    if np.isfinite(eps_q):
        for k, qd in zip(spec.q_nodes, spec.q_des):
            out.append(SocRow(int(k), "q", error_matrix(qd), -Q_IDENTITY, float(eps_q)))
    if np.isfinite(eps_w):
        for k, wd in zip(spec.w_nodes, spec.w_des):
            out.append(SocRow(int(k), "w", np.eye(3), -wd, float(eps_w)))
    return out


# --------------------------------------------------------------------------
# cone program builder
# --------------------------------------------------------------------------

class _Builder:
    """Collects ``A x + s = b`` rows by cone type in a deterministic order."""

    def __init__(self):
        self.n = 0
        self.layout = {}
        self._eq = []
        self._le = []
        self._soc = []
        self._soc_dims = []
        self._n_eq = 0
        self._n_le = 0
        self._n_soc = 0

    def var(self, name, shape):
        shape = tuple(np.atleast_1d(shape).tolist())
        size = int(np.prod(shape))
        idx = np.arange(self.n, self.n + size).reshape(shape)
        self.layout[name] = (self.n, shape)
        self.n += size
        return idx

    def _add(self, store, r, c, v, rhs, base):
        r = np.asarray(r, dtype=np.int64).ravel()
        c = np.asarray(c, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=float).ravel()
        keep = v != 0.0
        store.append((r[keep] + base, c[keep], v[keep], np.asarray(rhs, dtype=float).ravel()))

    def eq(self, r, c, v, rhs):
        """``sum v x[c] = rhs`` for local rows ``r``."""
        rhs = np.asarray(rhs, dtype=float).ravel()
        self._add(self._eq, r, c, v, rhs, self._n_eq)
        self._n_eq += rhs.size

    def le(self, r, c, v, rhs):
        """``sum v x[c] <= rhs``."""
        rhs = np.asarray(rhs, dtype=float).ravel()
        self._add(self._le, r, c, v, rhs, self._n_le)
        self._n_le += rhs.size

    def soc(self, dims, r, c, v, const):
        """Affine expressions ``const + sum v x[c]`` stacked into SOCs."""
        const = np.asarray(const, dtype=float).ravel()
        if int(np.sum(dims)) != const.size:
            raise ValueError("cone dimensions do not match row count")
        self._add(self._soc, r, c, -np.asarray(v, dtype=float), const, self._n_soc)
        self._n_soc += const.size
        self._soc_dims.extend(int(d) for d in np.atleast_1d(dims))

    def build(self, c) -> ConeProgram:
        blocks = []
        offset = 0
        for store, count in ((self._eq, self._n_eq), (self._le, self._n_le),
                             (self._soc, self._n_soc)):
            for r, cc, v, rhs in store:
                blocks.append((r + offset, cc, v))
            offset += count
        rows = np.concatenate([b[0] for b in blocks]) if blocks else np.zeros(0, int)
        cols = np.concatenate([b[1] for b in blocks]) if blocks else np.zeros(0, int)
        vals = np.concatenate([b[2] for b in blocks]) if blocks else np.zeros(0)
        b = np.concatenate([s[3] for store in (self._eq, self._le, self._soc)
                            for s in store] or [np.zeros(0)])
        A = sp.csc_matrix((vals, (rows, cols)), shape=(offset, self.n))
        A.sum_duplicates()
        A.sort_indices()
        cones = ConeDims(self._n_eq, self._n_le, tuple(self._soc_dims))
        return ConeProgram(np.asarray(c, dtype=float), A, b, cones, dict(self.layout))


def _dynamics_rows(bld, ltv, smap, xi, ui, tf_col, tf_fixed, vp, vm):
    """Scaled discrete dynamics with virtual controls, one block per interval."""
    N = ltv.K - 1
    sx, su = smap.sx, smap.su
    ox, ou = smap.offset[:NX], smap.offset[NX:NZ]
    otf = smap.offset[NZ]
    inv = 1.0 / sx
    Acur = -ltv.A * sx[None, None, :] * inv[None, :, None]
    Bcur = -ltv.Bm * su[None, None, :] * inv[None, :, None]
    Bnext = -ltv.Bp * su[None, None, :] * inv[None, :, None]
    rloc = np.arange(N)[:, None] * NX + np.arange(NX)[None, :]  # (N, 11)

    R, C, V = [], [], []

    def block(mat, cols):
        # mat (N, 11, w), cols (N, w)
        w = mat.shape[2]
        R.append(np.repeat(rloc[:, :, None], w, axis=2))
        C.append(np.broadcast_to(cols[:, None, :], mat.shape))
        V.append(mat)

    block(np.broadcast_to(np.eye(NX), (N, NX, NX)), xi[1:])
    block(Acur, xi[:-1])
    block(Bcur, ui[:-1])
    block(Bnext, ui[1:])
    block(-np.broadcast_to(np.eye(NX), (N, NX, NX)), vp)
    block(np.broadcast_to(np.eye(NX), (N, NX, NX)), vm)
    # affine part in physical units, moved to the right-hand side
    rhs = (ltv.e + np.einsum("kij,j->ki", ltv.A, ox) + np.einsum("kij,j->ki", ltv.Bm, ou)
           + np.einsum("kij,j->ki", ltv.Bp, ou) - ox)
    if tf_col is None:
        rhs = rhs + ltv.S * tf_fixed
    else:
        block((-ltv.S * smap.stf * inv[None, :])[:, :, None],
              np.full((N, 1), tf_col))
        rhs = rhs + ltv.S * otf
    rhs = rhs * inv[None, :]
    bld.eq(np.concatenate([r.ravel() for r in R]),
           np.concatenate([c.ravel() for c in C]),
           np.concatenate([v.ravel() for v in V]), rhs.ravel())


def _nonneg_rows(bld, *blocks):
    for idx in blocks:
        n = idx.size
        bld.le(np.arange(n), idx.ravel(), -np.ones(n), np.zeros(n))


def _box_rows(bld, smap, xi, ui, p, w_max=None):
    """|r_i| <= r_max and |u_i| <= u_max at every node (optional |w_i| <= w_max)."""
    K = xi.shape[0]
    specs = [(xi[:, IR], IR, p.r_max), (ui, slice(NX, NZ), p.u_max)]
    if _finite(w_max):
        specs.append((xi[:, IW], IW, w_max))
    for cols, sl, bound in specs:
        s = smap.scale[sl]
        o = smap.offset[sl]
        n = cols.size
        r = np.arange(n)
        bld.le(r, cols.ravel(), np.ones(n), np.tile((bound - o) / s, K))
        bld.le(r, cols.ravel(), -np.ones(n), np.tile((bound + o) / s, K))


def _trust_region_rows(bld, w_tr, eta, cols, zbar, squared=False):
    """Trust-region epigraphs on scaled node variables.

    ``eta_k >= ||w_tr (z_k - zbar_k)||`` or, with ``squared``,
    ``eta_k >= ||w_tr (z_k - zbar_k)||^2`` written as the rotated cone
    ``||(2 w_tr dz, eta - 1)|| <= eta + 1``.
    """
    K, w = cols.shape
    lead = 2 if squared else 1
    d = w + lead
    base = np.arange(K) * d
    r_z = base[:, None] + lead + np.arange(w)[None, :]
    wz = 2.0 * w_tr if squared else w_tr
    const = np.zeros(K * d)
    const[r_z.ravel()] = -wz * zbar.ravel()
    if squared:
        r = np.concatenate([base, base + 1, r_z.ravel()])
        c = np.concatenate([eta, eta, cols.ravel()])
        v = np.concatenate([np.ones(K), np.ones(K), np.full(K * w, wz)])
        const[base] = 1.0
        const[base + 1] = -1.0
    else:
        r = np.concatenate([base, r_z.ravel()])
        c = np.concatenate([eta, cols.ravel()])
        v = np.concatenate([np.ones(K), np.full(K * w, wz)])
    bld.soc([d] * K, r, c, v, const)


def _linear_rows(bld, rows: LinearRows, smap, xi, ui, tf_col, tf_fixed):
    """Map physical-stack rows onto scaled solver columns."""
    if rows.n_rows == 0:
        return
    K = xi.shape[0]
    col_scale = np.concatenate([np.tile(smap.sx, K), np.tile(smap.su, K), [smap.stf]])
    col_off = np.concatenate([np.tile(smap.offset[:NX], K),
                              np.tile(smap.offset[NX:NZ], K), [smap.offset[NZ]]])
    target = np.concatenate([xi.ravel(), ui.ravel(), [-1 if tf_col is None else tf_col]])
    G = rows.G.tocoo()
    rhs = rows.bound - rows.offset - rows.G @ col_off
    is_tf = G.col == K * NZ
    if tf_col is None:
        rhs = rhs - np.bincount(G.row[is_tf], G.data[is_tf] * (tf_fixed - col_off[-1]),
                                minlength=rows.n_rows)
        G = sp.coo_matrix((G.data[~is_tf], (G.row[~is_tf], G.col[~is_tf])), shape=G.shape)
    bld.le(G.row, target[G.col], G.data * col_scale[G.col], rhs)


def _check_quaternion(q, name):
    q = np.asarray(q, dtype=float)
    if q.shape != (4,) or abs(np.linalg.norm(q) - 1.0) > 1e-9:
        raise ValueError(f"{name} must be a unit quaternion")
    return q


def assemble_min_time(nominal: DecisionStack, p: SatelliteParams, cfg,
                      x_initial=None, q_final=None, ltv: DiscreteLtvSystem | None = None,
                      smap: ScalingMap | None = None) -> ConeProgram:
    """Minimum-time rest-to-rest subproblem about ``nominal``.

    Pins the whole initial state and the final attitude and rate; the final
    rotor momenta are free.  ``cfg`` supplies ``w_vc``, ``w_tr``,
    ``t_min_floor`` and optionally ``w_max``.  Boundary values default to
    the nominal's first state and last attitude.
    """
    K = nominal.K
    if K < 2:
        raise ValueError("need at least two nodes")
    x_initial = nominal.X[0] if x_initial is None else np.asarray(x_initial, dtype=float)
    q_final = nominal.X[-1, IQ] if q_final is None else q_final
    _check_quaternion(x_initial[IQ], "initial quaternion")
    q_final = _check_quaternion(q_final, "final quaternion")
    if smap is None:
        smap = ScalingMap.from_params(p, nominal.tf)
    if ltv is None:
        ltv = discretize_foh(nominal, p)

    bld = _Builder()
    xi = bld.var("x", (K, NX))
    ui = bld.var("u", (K, NU))
    tfi = bld.var("tf", (1,))
    vp = bld.var("vp", (K - 1, NX))
    vm = bld.var("vm", (K - 1, NX))
    eta = bld.var("eta", (K,))

    # boundary conditions
    x0s = (x_initial - smap.offset[:NX]) / smap.sx
    bld.eq(np.arange(NX), xi[0], np.ones(NX), x0s)
    xf = np.concatenate([q_final, np.zeros(3)])
    xfs = (xf - smap.offset[:7]) / smap.sx[:7]
    bld.eq(np.arange(7), xi[-1, :7], np.ones(7), xfs)

    _dynamics_rows(bld, ltv, smap, xi, ui, int(tfi[0]), None, vp, vm)
    _nonneg_rows(bld, vp, vm)
    _box_rows(bld, smap, xi, ui, p, getattr(cfg, "w_max", None))
    t_floor = (cfg.t_min_floor - smap.offset[NZ]) / smap.stf
    bld.le([0], [tfi[0]], [-1.0], [-t_floor])
    if _finite(p.P_max) or _finite(p.E_max):
        _linear_rows(bld, convexify_power_energy(nominal, p), smap, xi, ui, int(tfi[0]), None)

    zbar = smap.to_scaled(nominal.nodes())
    cols = np.column_stack([xi, ui, np.full(K, tfi[0])])
    _trust_region_rows(bld, cfg.w_tr, eta, cols, zbar, _squared(cfg))

    c = np.zeros(bld.n)
    c[tfi[0]] = smap.stf
    c[vp.ravel()] = cfg.w_vc
    c[vm.ravel()] = cfg.w_vc
    c[eta] = 1.0
    return bld.build(c)


def assemble_multi_target(nominal: DecisionStack, spec: PointingScheduleSpec,
                          p: SatelliteParams, cfg, x_initial=None,
                          eps_q: float = np.inf, eps_w: float = np.inf,
                          ltv: DiscreteLtvSystem | None = None,
                          smap: ScalingMap | None = None) -> ConeProgram:
    """Fixed-time pointing subproblem about ``nominal``.

    Objective: sum of quaternion errors ``||E(q_des) q - q_I||`` over the
    attitude nodes, ``gamma`` times the rate errors over the rate nodes,
    ``rho * ||u_k||`` summed over all nodes, plus virtual-control and
    trust-region penalties.  Only the initial state is pinned.  Finite
    ``eps_q``/``eps_w`` turn the matching error terms into hard constraints.
    """
    K = nominal.K
    spec.check_nodes(K)
    x_initial = nominal.X[0] if x_initial is None else np.asarray(x_initial, dtype=float)
    _check_quaternion(x_initial[IQ], "initial quaternion")
    if abs(nominal.tf - spec.t_f) > 1e-9 * spec.t_f:
        nominal = replace(nominal, tf=spec.t_f)
    if smap is None:
        smap = ScalingMap.from_params(p, spec.t_f)
    if ltv is None:
        ltv = discretize_foh(nominal, p)

    hard = constraint_formulation_rows(spec, eps_q, eps_w)
    hard_q = any(r.kind == "q" for r in hard)
    hard_w = any(r.kind == "w" for r in hard)

    bld = _Builder()
    xi = bld.var("x", (K, NX))
    ui = bld.var("u", (K, NU))
    vp = bld.var("vp", (K - 1, NX))
    vm = bld.var("vm", (K - 1, NX))
    eta = bld.var("eta", (K,))
    nq = spec.q_nodes.size
    nw = spec.w_nodes.size
    xiv = bld.var("xi", (nq,))
    psi = bld.var("psi", (nw,))
    zeta = bld.var("zeta", (K,))

    x0s = (x_initial - smap.offset[:NX]) / smap.sx
    bld.eq(np.arange(NX), xi[0], np.ones(NX), x0s)
    _dynamics_rows(bld, ltv, smap, xi, ui, None, spec.t_f, vp, vm)
    _nonneg_rows(bld, vp, vm)
    _box_rows(bld, smap, xi, ui, p, getattr(cfg, "w_max", None))
    if _finite(p.P_max) or _finite(p.E_max):
        _linear_rows(bld, convexify_power_energy(nominal, p, fixed_tf=True),
                     smap, xi, ui, None, spec.t_f)
    if hard_q:
        bld.le(np.arange(nq), xiv, np.ones(nq), np.full(nq, eps_q))
    if hard_w:
        bld.le(np.arange(nw), psi, np.ones(nw), np.full(nw, eps_w))

    # quaternion error epigraphs: xi_j >= || E(q_des) (s_q q_hat + o_q) - q_I ||
    sq, oq = smap.sx[IQ], smap.offset[IQ]
    for j, (k, qd) in enumerate(zip(spec.q_nodes, spec.q_des)):
        E = error_matrix(qd)
        r = np.concatenate([[0], np.repeat(np.arange(1, 5), 4)])
        c = np.concatenate([[xiv[j]], np.tile(xi[k, IQ], 4)])
        v = np.concatenate([[1.0], (E * sq[None, :]).ravel()])
        bld.soc([5], r, c, v, np.concatenate([[0.0], E @ oq - Q_IDENTITY]))
    sw, ow = smap.sx[IW], smap.offset[IW]
    for j, (k, wd) in enumerate(zip(spec.w_nodes, spec.w_des)):
        bld.soc([4], np.arange(4), np.concatenate([[psi[j]], xi[k, IW]]),
                np.concatenate([[1.0], sw]), np.concatenate([[0.0], ow - wd]))
    # control effort epigraphs
    su, ou = smap.su, smap.offset[NX:NZ]
    r = np.concatenate([np.arange(K) * 5, ((np.arange(K) * 5)[:, None] + 1
                                           + np.arange(NU)[None, :]).ravel()])
    c = np.concatenate([zeta, ui.ravel()])
    v = np.concatenate([np.ones(K), np.tile(su, K)])
    const = np.zeros(K * 5)
    const[((np.arange(K) * 5)[:, None] + 1 + np.arange(NU)[None, :]).ravel()] = np.tile(ou, K)
    bld.soc([5] * K, r, c, v, const)

    zbar = smap.to_scaled(nominal.nodes())[:, :NZ]
    _trust_region_rows(bld, cfg.w_tr, eta, np.column_stack([xi, ui]), zbar,
                       _squared(cfg))

    c = np.zeros(bld.n)
    if not hard_q:
        c[xiv] = 1.0
    if not hard_w:
        c[psi] = spec.gamma
    c[zeta] = spec.rho
    c[vp.ravel()] = cfg.w_vc
    c[vm.ravel()] = cfg.w_vc
    c[eta] = 1.0
    return bld.build(c)


def block(prog: ConeProgram, x, name):
    """Slice a named variable block out of a solution vector."""
    start, shape = prog.layout[name]
    return np.asarray(x)[start:start + int(np.prod(shape))].reshape(shape)


def decode(prog: ConeProgram, x, smap: ScalingMap, tf_fixed: float | None = None) -> DecisionStack:
    """Physical :class:`DecisionStack` from a subproblem solution vector."""
    X = block(prog, x, "x")
    U = block(prog, x, "u")
    K = X.shape[0]
    tf_s = block(prog, x, "tf")[0] if "tf" in prog.layout else (tf_fixed - smap.offset[NZ]) / smap.stf
    Zs = np.column_stack([X, U, np.full(K, tf_s)])
    V = block(prog, x, "vp") - block(prog, x, "vm")
    return DecisionStack.from_nodes(smap.to_physical(Zs), V)
