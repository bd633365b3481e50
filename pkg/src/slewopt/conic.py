"""Primal-dual interior-point solver for second-order cone programs.

Problems are given in the canonical form::

    minimize    c' x
    subject to  A x + s = b
                s in K = {0}^z  x  R_+^l  x  Q^{q_1} x ... x Q^{q_N}

where the rows of ``A`` are ordered zero cone first, then the nonnegative
orthant, then the second-order cones ``Q^q = {(t, v) : ||v||_2 <= t}``.

The solver runs on the homogeneous self-dual embedding, so infeasible and
unbounded problems are certified instead of stalling.  Each iteration uses
Nesterov-Todd scaling and a Mehrotra predictor-corrector step; the search
directions come from a sparse quasi-definite KKT system with static
regularization and iterative refinement.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITERS = "max_iters"
NUMERICAL = "numerical"
OPTIMAL_INACCURATE = "optimal_inaccurate"

# a stalled solve whose best iterate meets the tolerances relaxed by this
# factor is reported as OPTIMAL_INACCURATE
INACCURATE_FACTOR = 1e3


@dataclass(frozen=True)
class ConeDims:
    zero: int = 0
    nonneg: int = 0
    soc: tuple = ()

    @property
    def total(self) -> int:
        return self.zero + self.nonneg + int(sum(self.soc))


@dataclass(eq=False)
class ConeProgram:
    """Canonical cone program ``min c'x  s.t.  A x + s = b,  s in K``."""

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: ConeDims
    # name -> (start, shape) of named variable blocks, filled by assemblers
    layout: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.A = sp.csc_matrix(self.A, dtype=float)
        if not isinstance(self.cones, ConeDims):
            self.cones = ConeDims(**self.cones)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    def to_json(self) -> dict:
        """Debug container: objective, triplet-form A, b and cone layout."""
        A = self.A.tocoo()
        return {
            "n": self.n, "m": self.m,
            "c": self.c.tolist(),
            "A": {"rows": A.row.tolist(), "cols": A.col.tolist(),
                  "vals": A.data.tolist()},
            "b": self.b.tolist(),
            "cones": {"zero": self.cones.zero, "nonneg": self.cones.nonneg,
                      "soc": list(self.cones.soc)},
            "layout": {k: [int(v[0]), list(v[1])] for k, v in self.layout.items()},
        }

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def from_json(cls, d: dict) -> "ConeProgram":
        A = sp.coo_matrix((d["A"]["vals"], (d["A"]["rows"], d["A"]["cols"])),
                          shape=(d["m"], d["n"]))
        cones = d["cones"]
        layout = {k: (v[0], tuple(v[1])) for k, v in d.get("layout", {}).items()}
        return cls(np.array(d["c"]), A.tocsc(), np.array(d["b"]),
                   ConeDims(cones["zero"], cones["nonneg"], tuple(cones["soc"])),
                   layout)


@dataclass
class ConeSolution:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    status: str
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    history: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def validate(prog: ConeProgram) -> list[str]:
    """Cheap structural diagnostics; an empty list means nothing was found."""
    msgs = []
    m, n = prog.A.shape
    if prog.c.shape != (n,):
        msgs.append(f"c has length {prog.c.size} but A has {n} columns")
    if prog.b.shape != (m,):
        msgs.append(f"b has length {prog.b.size} but A has {m} rows")
    cd = prog.cones
    if cd.total != m:
        msgs.append(f"cone dimensions sum to {cd.total} but there are {m} slack rows")
    if cd.zero < 0 or cd.nonneg < 0:
        msgs.append("negative cone dimension")
    for i, q in enumerate(cd.soc):
        if q < 1:
            msgs.append(f"second-order cone {i} has dimension {q} < 1")
    if msgs:
        return msgs
    A = prog.A.tocsr()
    row_nnz = np.diff(A.indptr)
    empty = np.flatnonzero(row_nnz == 0)
    if empty.size:
        msgs.append(f"{empty.size} all-zero row(s) in A, first at {int(empty[0])}")
    if not np.all(np.isfinite(A.data)) or not np.all(np.isfinite(prog.b)) \
            or not np.all(np.isfinite(prog.c)):
        msgs.append("non-finite data")
    if cd.zero:
        for i, j, _ in _parallel_rows(A[:cd.zero], prog.b[:cd.zero]):
            msgs.append(f"rank warning: equality rows {i} and {j} are parallel")
    return msgs


def _parallel_rows(Aeq, beq):
    """Pairs ``(first, dup, ratio)`` of equality rows with ``a_dup = ratio * a_first``.

    ``ratio`` is NaN when the right-hand sides disagree (inconsistent rows).
    """
    Aeq = sp.csr_matrix(Aeq)
    seen = {}
    out = []
    for i in range(Aeq.shape[0]):
        lo, hi = Aeq.indptr[i], Aeq.indptr[i + 1]
        if lo == hi:
            continue
        idx = Aeq.indices[lo:hi]
        val = Aeq.data[lo:hi]
        order = np.argsort(idx)
        idx, val = idx[order], val[order]
        piv = val[np.argmax(np.abs(val))]
        key = (tuple(idx), tuple(np.round(val / piv, 12)))
        if key in seen:
            j, pj = seen[key]
            ratio = piv / pj
            consistent = np.isclose(beq[i], ratio * beq[j], rtol=1e-12, atol=1e-12)
            out.append((j, i, ratio if consistent else np.nan))
        else:
            seen[key] = (i, piv)
    return out


def _row_ratio(Aeq, j, i):
    """``r`` with ``Aeq[i] = r * Aeq[j]`` for rows known to be parallel."""
    aj = Aeq[j].toarray().ravel()
    return float(Aeq[i].toarray().ravel() @ aj / (aj @ aj))


class _Cones:
    """Orthant plus second-order cones, with SOCs batched by dimension."""

    def __init__(self, l: int, soc: tuple):
        self.l = l
        self.soc = tuple(int(q) for q in soc)
        self.m = l + sum(self.soc)
        self.degree = l + len(self.soc)
        starts = l + np.concatenate([[0], np.cumsum(self.soc)[:-1]]).astype(int) \
            if self.soc else np.zeros(0, int)
        self.groups = []
        dims = np.array(self.soc, dtype=int)
        for d in sorted(set(self.soc)):
            st = starts[dims == d]
            self.groups.append((d, st[:, None] + np.arange(d)[None, :]))
        self.e = np.zeros(self.m)
        self.e[:l] = 1.0
        for d, idx in self.groups:
            self.e[idx[:, 0]] = 1.0

    def min_eig(self, v):
        """Smallest 'eigenvalue' per cone; v is interior iff all are > 0."""
        out = [v[:self.l]]
        for d, idx in self.groups:
            blk = v[idx]
            out.append(blk[:, 0] - np.linalg.norm(blk[:, 1:], axis=1))
        return np.concatenate(out) if out else np.zeros(0)

    def shift_interior(self, v):
        if self.m == 0:
            return v
        alpha = -np.min(self.min_eig(v))
        if alpha >= -1e-8:
            v = v + (1.0 + max(alpha, 0.0)) * self.e
        return v

    def max_step(self, v, dv):
        """Largest alpha with v + alpha dv in the cone (inf if unbounded)."""
        alpha = np.inf
        if self.l:
            d = dv[:self.l]
            neg = d < 0
            if np.any(neg):
                alpha = min(alpha, np.min(-v[:self.l][neg] / d[neg]))
        for d, idx in self.groups:
            x = v[idx]
            dx = dv[idx]
            a = dx[:, 0] ** 2 - np.sum(dx[:, 1:] ** 2, axis=1)
            b = x[:, 0] * dx[:, 0] - np.sum(x[:, 1:] * dx[:, 1:], axis=1)
            c = np.maximum(x[:, 0] ** 2 - np.sum(x[:, 1:] ** 2, axis=1), 0.0)
            disc = b * b - a * c
            hit = (a < 0) | ((b < 0) & (disc >= 0))
            if np.any(hit):
                root = c[hit] / (-b[hit] + np.sqrt(np.maximum(disc[hit], 0.0)))
                alpha = min(alpha, np.min(root))
            # a leading component that turns negative also leaves the cone
            neg0 = dx[:, 0] < 0
            if np.any(neg0):
                alpha = min(alpha, np.min(-x[neg0, 0] / dx[neg0, 0]))
        return alpha

    def circ(self, u, v):
        """Jordan product u o v."""
        out = np.empty(self.m)
        out[:self.l] = u[:self.l] * v[:self.l]
        for d, idx in self.groups:
            U, V = u[idx], v[idx]
            out[idx[:, 0]] = np.sum(U * V, axis=1)
            out[idx[:, 1:]] = U[:, :1] * V[:, 1:] + V[:, :1] * U[:, 1:]
        return out

    def circ_div(self, lam, v):
        """Solve lam o x = v for x."""
        out = np.empty(self.m)
        # a degenerate lam only occurs in a stalled solve; the caller rejects
        # the resulting non-finite step
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._circ_div(lam, v, out)

    def _circ_div(self, lam, v, out):
        out[:self.l] = v[:self.l] / lam[:self.l]
        for d, idx in self.groups:
            L, V = lam[idx], v[idx]
            l0 = L[:, 0]
            l1 = L[:, 1:]
            det = l0 * l0 - np.sum(l1 * l1, axis=1)
            x0 = (l0 * V[:, 0] - np.sum(l1 * V[:, 1:], axis=1)) / det
            out[idx[:, 0]] = x0
            out[idx[:, 1:]] = (V[:, 1:] - x0[:, None] * l1) / l0[:, None]
        return out


class _Scaling:
    """Nesterov-Todd scaling W with W z = W^{-1} s = lambda."""

    def __init__(self, cones: _Cones, s, z):
        self.cones = cones
        l = cones.l
        self.d = np.sqrt(s[:l] / z[:l])
        self.blocks = []
        lam = np.empty(cones.m)
        lam[:l] = np.sqrt(s[:l] * z[:l])
        for d, idx in cones.groups:
            S, Z = s[idx], z[idx]
            sn = np.sqrt(np.maximum(S[:, 0] ** 2 - np.sum(S[:, 1:] ** 2, axis=1), 1e-300))
            zn = np.sqrt(np.maximum(Z[:, 0] ** 2 - np.sum(Z[:, 1:] ** 2, axis=1), 1e-300))
            Sb = S / sn[:, None]
            Zb = Z / zn[:, None]
            gamma = np.sqrt(0.5 * (1.0 + np.sum(Sb * Zb, axis=1)))
            w = Sb.copy()
            w[:, 0] += Zb[:, 0]
            w[:, 1:] -= Zb[:, 1:]
            w /= (2.0 * gamma)[:, None]
            eta = np.sqrt(sn / zn)
            self.blocks.append((idx, w, eta))
        self.lam = lam
        self.lam = self.apply(z)
        self.lam[:l] = np.sqrt(s[:l] * z[:l])

    def apply(self, v, inverse=False):
        out = np.empty(self.cones.m)
        l = self.cones.l
        out[:l] = v[:l] / self.d if inverse else v[:l] * self.d
        for idx, w, eta in self.blocks:
            V = v[idx]
            w0 = w[:, 0]
            w1 = w[:, 1:]
            dot = np.sum(w1 * V[:, 1:], axis=1)
            sgn = -1.0 if inverse else 1.0
            o0 = w0 * V[:, 0] + sgn * dot
            coef = sgn * V[:, 0] + dot / (1.0 + w0)
            o1 = V[:, 1:] + coef[:, None] * w1
            f = (1.0 / eta) if inverse else eta
            out[idx[:, 0]] = f * o0
            out[idx[:, 1:]] = f[:, None] * o1
        return out

    def inverse_matrix(self):
        """Sparse block-diagonal W^{-1}."""
        l = self.cones.l
        rows = [np.arange(l)]
        cols = [np.arange(l)]
        vals = [1.0 / self.d]
        for idx, w, eta in self.blocks:
            d = w.shape[1]
            B = np.empty((w.shape[0], d, d))
            w0 = w[:, 0]
            w1 = w[:, 1:]
            B[:, 0, 0] = w0
            B[:, 0, 1:] = -w1
            B[:, 1:, 0] = -w1
            B[:, 1:, 1:] = w1[:, :, None] * w1[:, None, :] / (1.0 + w0)[:, None, None]
            dd = np.arange(1, d)
            B[:, dd, dd] += 1.0
            B /= eta[:, None, None]
            rows.append(np.repeat(idx, d, axis=1).ravel())
            cols.append(np.tile(idx, (1, d)).ravel())
            vals.append(B.ravel())
        m = self.cones.m
        return sp.csr_matrix((np.concatenate(vals),
                              (np.concatenate(rows), np.concatenate(cols))), shape=(m, m))


class _KKT:
    """Regularized quasi-definite KKT matrix in Nesterov-Todd scaled form.

    [[ dI        Aeq'   (W^-1 G)' ]
     [ Aeq       -dI    0         ]
     [ W^-1 G    0      -I        ]]

    acting on ``(dx, dy, W dz)``.  Working with ``W dz`` keeps the huge and
    tiny eigenvalues of ``W^2`` on near-boundary cones out of the matrix.
    """

    def __init__(self, Aeq, G, cones: _Cones, delta: float, refine: int):
        self.n = G.shape[1] if G.shape[0] else Aeq.shape[1]
        self.p = Aeq.shape[0]
        self.m = G.shape[0]
        self.refine = refine
        n, p, m = self.n, self.p, self.m
        self.N = n + p + m
        self.G = sp.csr_matrix(G)
        Ae = Aeq.tocoo()
        self.const_rows = np.concatenate([Ae.row + n, Ae.col, n + p + np.arange(m)])
        self.const_cols = np.concatenate([Ae.col, Ae.row + n, n + p + np.arange(m)])
        self.const_vals = np.concatenate([Ae.data, Ae.data, -np.ones(m)])
        self.reg = sp.diags(np.concatenate([np.full(n, delta), np.full(p, -delta),
                                            np.zeros(m)]))
        self.lu = None
        self.K_true = None

    def factor(self, scaling: _Scaling):
        n, p = self.n, self.p
        WG = (scaling.inverse_matrix() @ self.G).tocoo()
        rows = np.concatenate([self.const_rows, WG.row + n + p, WG.col])
        cols = np.concatenate([self.const_cols, WG.col, WG.row + n + p])
        vals = np.concatenate([self.const_vals, WG.data, WG.data])
        K = sp.coo_matrix((vals, (rows, cols)), shape=(self.N, self.N)).tocsc()
        self.K_true = K
        Kr = (K + self.reg).tocsc()
        try:
            # quasi-definite: any symmetric ordering factors without pivoting
            self.lu = spla.splu(Kr, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                options={"SymmetricMode": True})
        except RuntimeError:
            # an exactly cancelled diagonal pivot near the boundary; pivot instead
            self.lu = spla.splu(Kr, permc_spec="COLAMD")

    def solve(self, rhs):
        sol = self.lu.solve(rhs)
        res = rhs - self.K_true @ sol
        rn = np.linalg.norm(res)
        for _ in range(self.refine):
            if rn <= 1e-14 * (1.0 + np.linalg.norm(rhs)):
                break
            cand = sol + self.lu.solve(res)
            res_c = rhs - self.K_true @ cand
            rn_c = np.linalg.norm(res_c)
            if rn_c >= rn:
                break
            sol, res, rn = cand, res_c, rn_c
        return sol[:self.n], sol[self.n:self.n + self.p], sol[self.n + self.p:]


def _equilibrate(Aeq, G, cones: _Cones, iters: int = 15):
    """Ruiz scaling ``D A E`` towards unit infinity-norm rows and columns.

    Row factors are shared within each second-order cone so that the scaled
    slack stays in the same cone.
    """
    p, n = Aeq.shape
    m = G.shape[0]
    M = sp.vstack([Aeq, G]).tocsr()
    d = np.ones(p + m)
    e = np.ones(n)
    for _ in range(iters):
        Ma = abs(M)
        rn = np.asarray(Ma.max(axis=1).todense()).ravel()
        for dim, idx in cones.groups:
            blk = rn[p + idx]
            rn[p + idx] = blk.max(axis=1, keepdims=True)
        cn = np.asarray(Ma.max(axis=0).todense()).ravel()
        rn[rn == 0] = 1.0
        cn[cn == 0] = 1.0
        dr = np.clip(1.0 / np.sqrt(rn), 1e-4, 1e4)
        dc = np.clip(1.0 / np.sqrt(cn), 1e-4, 1e4)
        M = sp.diags(dr) @ M @ sp.diags(dc)
        d *= dr
        e *= dc
        if np.max(np.abs(1.0 - rn)) < 1e-2 and np.max(np.abs(1.0 - cn)) < 1e-2:
            break
    M = M.tocsr()
    return M[:p], M[p:], d[:p], d[p:], e


def solve(prog: ConeProgram, gap_tol: float = 1e-8, feas_tol: float = 1e-8,
          max_iters: int = 100, delta: float = 1e-8, refine: int = 1,
          verbose: bool = False) -> ConeSolution:
    """Solve a cone program.

    ``gap`` in the returned solution is the complementarity ``s'z`` of the
    recovered primal-dual pair.  ``optimal`` means that gap is below
    ``gap_tol`` and both relative residuals are below ``feas_tol``.  When the
    iteration stalls first, the best iterate is returned, flagged
    ``optimal_inaccurate`` if it meets the tolerances relaxed by
    ``INACCURATE_FACTOR``.
    """
    diags = validate(prog)
    hard = [d for d in diags if not d.startswith("rank warning")
            and "all-zero row" not in d]
    if hard:
        raise ValueError("malformed cone program: " + "; ".join(hard))

    c, b = prog.c, prog.b
    A = prog.A.tocsr()
    n = c.size
    p = prog.cones.zero
    Aeq, beq = A[:p], b[:p]
    G, h = A[p:], b[p:]
    p_full = p
    keep = np.arange(p)
    if p:
        dups = _parallel_rows(Aeq, beq)
        for j, i, ratio in dups:
            if np.isnan(ratio):
                # a_i = r a_j but b_i != r b_j: y = e_i - r e_j certifies it
                y = np.zeros(b.size)
                y[i], y[j] = 1.0, -_row_ratio(Aeq, j, i)
                y /= -(b @ y)
                return ConeSolution(np.full(n, np.nan), y, np.full(b.size, np.nan),
                                    INFEASIBLE, np.inf, np.inf, np.nan, np.nan,
                                    np.nan, 0, [])
        keep = np.setdiff1d(np.arange(p), [i for _, i, _ in dups])
        Aeq, beq = Aeq[keep], beq[keep]
        p = keep.size
    cones = _Cones(prog.cones.nonneg, prog.cones.soc)
    m = cones.m
    norm_c = max(1.0, np.linalg.norm(c))
    norm_b = max(1.0, np.linalg.norm(beq)) if p else 1.0
    norm_h = max(1.0, np.linalg.norm(h)) if m else 1.0

    # iterate on the equilibrated problem, measure residuals in original units
    Aeq, G, d_eq, d_g, e_x = _equilibrate(Aeq, G, cones)
    c = c * e_x
    beq = beq * d_eq
    h = h * d_g
    AeqT = Aeq.T.tocsr()
    GT = G.T.tocsr()

    kkt = _KKT(Aeq, G, cones, delta, refine)

    # initial point: least-squares primal / dual with W = I
    ident = _Scaling(cones, np.asarray(cones.e, float), np.asarray(cones.e, float))
    kkt.factor(ident)
    x0, _, zp = kkt.solve(np.concatenate([np.zeros(n), beq, h]))
    s = cones.shift_interior(-zp)
    _, y, zd = kkt.solve(np.concatenate([-c, np.zeros(p), np.zeros(m)]))
    z = cones.shift_interior(zd)
    x = x0
    tau = 1.0
    kap = 1.0

    status = MAX_ITERS
    history = []
    best = None
    it = 0
    for it in range(max_iters + 1):
        # residuals of the embedding
        rx = AeqT @ y + GT @ z + c * tau
        ry = -(Aeq @ x) + beq * tau
        rz = -(G @ x) + h * tau - s
        cx = c @ x
        by_hz = beq @ y + h @ z
        rt = -cx - by_hz - kap

        pcost = cx / tau
        dcost = -by_hz / tau
        gap_abs = (s @ z) / tau ** 2
        gap = gap_abs
        pres = max(np.linalg.norm(ry / d_eq) / (tau * norm_b) if p else 0.0,
                   np.linalg.norm(rz / d_g) / (tau * norm_h) if m else 0.0)
        dres = np.linalg.norm(rx / e_x) / (tau * norm_c)
        history.append((it, pcost, dcost, gap, pres, dres, tau, kap))
        if verbose:
            log.info("%3d  pcost %+.8e  dcost %+.8e  gap %.2e  pres %.2e  "
                     "dres %.2e  k/t %.2e", it, pcost, dcost, gap, pres, dres, kap / tau)
        score = max(gap, pres, dres)
        if best is None or score < best[0]:
            best = (score, e_x * x / tau, d_eq * y / tau, s / (d_g * tau),
                    d_g * z / tau, pcost, dcost, gap, pres, dres, it)

        if pres <= feas_tol and dres <= feas_tol and gap <= gap_tol:
            status = OPTIMAL
            break
        # infeasibility certificates
        if by_hz < 0:
            pinf = np.linalg.norm((AeqT @ y + GT @ z) / e_x) / (-by_hz)
            if pinf <= feas_tol and tau < kap:
                status = INFEASIBLE
                break
        if cx < 0:
            dinf = max(np.linalg.norm((Aeq @ x) / d_eq) if p else 0.0,
                       np.linalg.norm((G @ x + s) / d_g) if m else 0.0) / (-cx)
            if dinf <= feas_tol and tau < kap:
                status = UNBOUNDED
                break
        if it == max_iters:
            break

        scaling = _Scaling(cones, s, z)
        lam = scaling.lam
        mu = (s @ z + tau * kap) / (cones.degree + 1)
        try:
            kkt.factor(scaling)
        except RuntimeError as exc:
            log.debug("KKT factorization failed: %s", exc)
            status = NUMERICAL
            break
        d1x, d1y, d1z = kkt.solve(np.concatenate([-c, beq, scaling.apply(h, inverse=True)]))
        d1z = scaling.apply(d1z, inverse=True)
        denom_base = kap / tau - (c @ d1x + beq @ d1y + h @ d1z)

        def direction(sigma, cs, ck):
            ex = -(1.0 - sigma) * rx
            ey = -(1.0 - sigma) * ry
            ez = -(1.0 - sigma) * rz
            et = -(1.0 - sigma) * rt
            lam_cs = cones.circ_div(lam, cs)
            d2x, d2y, d2zt = kkt.solve(np.concatenate(
                [ex, -ey, -scaling.apply(ez, inverse=True) - lam_cs]))
            d2z = scaling.apply(d2zt, inverse=True)
            dtau = (et + ck / tau + c @ d2x + beq @ d2y + h @ d2z) / denom_base
            dx = d2x + dtau * d1x
            dy = d2y + dtau * d1y
            dz = d2z + dtau * d1z
            # primal block of the Newton system, exact in floating point
            ds = -ez - G @ dx + h * dtau
            dkap = (ck - kap * dtau) / tau
            return dx, dy, dz, ds, dtau, dkap

        def step_length(dz, ds, dtau, dkap):
            a = min(cones.max_step(s, ds), cones.max_step(z, dz))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kap / dkap)
            return a

        # predictor
        lam_lam = cones.circ(lam, lam)
        dx, dy, dz, ds, dtau, dkap = direction(0.0, -lam_lam, -tau * kap)
        alpha_aff = min(1.0, step_length(dz, ds, dtau, dkap))
        sigma = float(np.clip((1.0 - alpha_aff) ** 3, 0.0, 1.0))
        # corrector
        cs = -lam_lam + sigma * mu * cones.e \
            - cones.circ(scaling.apply(ds, inverse=True), scaling.apply(dz))
        ck = -tau * kap + sigma * mu - dtau * dkap
        dx, dy, dz, ds, dtau, dkap = direction(sigma, cs, ck)
        alpha = min(1.0, 0.99 * step_length(dz, ds, dtau, dkap))
        if not np.isfinite(alpha) or alpha < 1e-12:
            status = NUMERICAL
            break
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau = tau + alpha * dtau
        kap = kap + alpha * dkap
        if not (np.all(np.isfinite(x)) and np.isfinite(tau)):
            status = NUMERICAL
            break

    if status == INFEASIBLE:
        scale = -(beq @ y + h @ z)
        y_eq = np.zeros(p_full)
        y_eq[keep] = d_eq * y
        return ConeSolution(np.full(n, np.nan), np.concatenate([y_eq, d_g * z]) / scale,
                            np.full(m + p_full, np.nan),
                            status, np.inf, np.inf, np.nan, np.nan, np.nan, it, history)
    if status == UNBOUNDED:
        scale = -(c @ x)
        return ConeSolution(e_x * x / scale, np.full(p_full + m, np.nan),
                            np.full(m + p_full, np.nan),
                            status, -np.inf, -np.inf, np.nan, np.nan, np.nan, it, history)
    if status == OPTIMAL:
        xs, ys = e_x * x / tau, d_eq * y / tau
        ss, zs = s / (d_g * tau), d_g * z / tau
        pc, dc, g, pr, dr = pcost, dcost, gap, pres, dres
    else:
        _, xs, ys, ss, zs, pc, dc, g, pr, dr, _ = best
        if (g <= INACCURATE_FACTOR * gap_tol and pr <= INACCURATE_FACTOR * feas_tol
                and dr <= INACCURATE_FACTOR * feas_tol):
            status = OPTIMAL_INACCURATE
    y_eq = np.zeros(p_full)
    y_eq[keep] = ys
    y_full = np.concatenate([y_eq, zs])
    s_full = np.concatenate([np.zeros(p_full), ss])
    return ConeSolution(xs, y_full, s_full, status, pc, dc, g, pr, dr, it, history)
