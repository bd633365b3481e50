"""Hand-built cone programs with closed-form solutions.

Each case is ``min c'x  s.t.  A x + s = b,  s in K`` with a unique optimum
``x_star``.  Cone rows are ordered zero, nonnegative, then second-order
cones ``s0 >= ||s[1:]||``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from slewopt.conic import ConeDims, ConeProgram


@dataclass
class Case:
    name: str
    prog: ConeProgram
    x_star: np.ndarray
    # only the first ``n_check`` entries are unique (auxiliary epigraphs follow)
    n_check: int | None = None

    @property
    def objective(self) -> float:
        return float(self.prog.c @ self.x_star)


class _Rows:
    """Accumulates rows as ``s = b - A x`` blocks by cone type."""

    def __init__(self, n: int):
        self.n = n
        self.zero, self.nonneg, self.soc = [], [], []

    def eq(self, a, b):
        """``a x = b`` (rows of a matrix allowed)."""
        self.zero.append((np.atleast_2d(a), np.atleast_1d(b)))

    def le(self, a, b):
        """``a x <= b``."""
        self.nonneg.append((np.atleast_2d(a), np.atleast_1d(b)))

    def cone(self, F, g):
        """``F x + g`` lies in the second-order cone (first entry is the bound)."""
        self.soc.append((-np.atleast_2d(F), np.atleast_1d(g)))

    def program(self, c) -> ConeProgram:
        blocks = self.zero + self.nonneg + self.soc
        A = np.vstack([a for a, _ in blocks])
        b = np.concatenate([v for _, v in blocks])
        dims = ConeDims(sum(a.shape[0] for a, _ in self.zero),
                        sum(a.shape[0] for a, _ in self.nonneg),
                        tuple(a.shape[0] for a, _ in self.soc))
        return ConeProgram(np.asarray(c, dtype=float), sp.csc_matrix(A), b, dims)


def _epigraph_norm(rows: _Rows, t_idx: int, M, m):
    """``||M x + m|| <= x[t_idx]``."""
    M = np.atleast_2d(M)
    F = np.zeros((M.shape[0] + 1, rows.n))
    F[0, t_idx] = 1.0
    F[1:] = M
    rows.cone(F, np.concatenate([[0.0], m]))


def _rotated(rows: _Rows, u_row, v_row, w_rows, const_u=0.0, const_v=0.0, const_w=None):
    """``||w||^2 <= u v`` with ``u, v >= 0`` as ``||(2w, u - v)|| <= u + v``."""
    w_rows = np.atleast_2d(w_rows)
    const_w = np.zeros(w_rows.shape[0]) if const_w is None else np.asarray(const_w, float)
    F = np.vstack([u_row + v_row, 2.0 * w_rows, u_row - v_row])
    g = np.concatenate([[const_u + const_v], 2.0 * const_w, [const_u - const_v]])
    rows.cone(F, g)


def cases() -> list[Case]:
    out = []
    I2, I3 = np.eye(2), np.eye(3)

    # -- linear programs --------------------------------------------------
    r = _Rows(1)
    r.le([[-1.0]], [-1.0])
    out.append(Case("lp_lower_bound", r.program([1.0]), np.array([1.0])))

    r = _Rows(2)
    r.eq([[1.0, 1.0]], [1.0])
    r.le(-I2, np.zeros(2))
    out.append(Case("lp_simplex_vertex", r.program([1.0, 2.0]), np.array([1.0, 0.0])))

    r = _Rows(3)
    r.le(np.vstack([I3, -I3]), np.ones(6))
    out.append(Case("lp_box", r.program([1.0, -2.0, 3.0]), np.array([-1.0, 1.0, -1.0])))

    r = _Rows(2)
    r.le([[1.0, 2.0], [3.0, 1.0]], [4.0, 6.0])
    r.le(-I2, np.zeros(2))
    out.append(Case("lp_polytope_corner", r.program([-1.0, -1.0]), np.array([1.6, 1.2])))

    # degenerate vertex: three constraints active at (1, 1)
    r = _Rows(2)
    r.le([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [1.0, 1.0, 2.0])
    r.le(-I2, np.zeros(2))
    out.append(Case("lp_degenerate_vertex", r.program([-1.0, -2.0]), np.array([1.0, 1.0])))

    # duplicated and scaled equality rows
    r = _Rows(3)
    r.eq([[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, -1.0, 0.0], [2.0, -2.0, 0.0]],
         [3.0, 3.0, 0.0, 0.0])
    r.le(-I3, np.zeros(3))
    out.append(Case("lp_duplicated_equalities", r.program([1.0, 1.0, 2.0]),
                    np.array([1.5, 1.5, 0.0])))

    r = _Rows(2)
    r.eq([[1.0, -1.0]], [0.0])
    r.le([[0.0, -1.0]], [5.0])
    out.append(Case("lp_free_variable", r.program([1.0, 0.0]), np.array([-5.0, -5.0])))

    # duplicated inequality rows
    r = _Rows(2)
    r.le([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0], [-1.0, 0.0], [0.0, -1.0]],
         [1.0, 1.0, 2.0, 0.0, 0.0])
    out.append(Case("lp_duplicated_inequalities", r.program([-2.0, -1.0]),
                    np.array([1.0, 0.0])))

    # -- norm minimization ----------------------------------------------
    # projection of a onto the plane 1'x = 1; x = (x, t)
    a = np.array([2.0, -1.0, 0.5])
    r = _Rows(4)
    r.eq([[1.0, 1.0, 1.0, 0.0]], [1.0])
    _epigraph_norm(r, 3, np.hstack([I3, np.zeros((3, 1))]), -a)
    x = a - (a.sum() - 1.0) / 3.0
    out.append(Case("proj_hyperplane", r.program([0, 0, 0, 1.0]),
                    np.r_[x, np.linalg.norm(x - a)]))

    # projection onto the unit ball
    a = np.array([3.0, 4.0])
    r = _Rows(3)
    r.cone(np.array([[0, 0, 0], [1.0, 0, 0], [0, 1.0, 0]]), np.array([1.0, 0, 0]))
    _epigraph_norm(r, 2, np.hstack([I2, np.zeros((2, 1))]), -a)
    out.append(Case("proj_unit_ball", r.program([0, 0, 1.0]), np.array([0.6, 0.8, 4.0])))

    # projection onto a halfspace
    a, w, beta = np.array([2.0, 1.0, 1.0]), np.array([1.0, 2.0, -1.0]), 0.5
    r = _Rows(4)
    r.le([np.r_[w, 0.0]], [beta])
    _epigraph_norm(r, 3, np.hstack([I3, np.zeros((3, 1))]), -a)
    x = a - (w @ a - beta) * w / (w @ w)
    out.append(Case("proj_halfspace", r.program([0, 0, 0, 1.0]),
                    np.r_[x, np.linalg.norm(x - a)]))

    # linear objective over a ball
    c = np.array([1.0, -2.0, 2.0])
    r = _Rows(3)
    r.cone(np.vstack([np.zeros(3), I3]), np.r_[1.0, 0, 0, 0])
    out.append(Case("linear_over_unit_ball", r.program(c), -c / 3.0))

    x0, rad = np.array([1.0, 2.0]), 0.5
    c = np.array([3.0, 4.0])
    r = _Rows(2)
    r.cone(np.vstack([np.zeros(2), I2]), np.r_[rad, -x0])
    out.append(Case("linear_over_shifted_ball", r.program(c), x0 - rad * c / 5.0))

    # least squares  min ||M x - y||
    M = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]])
    y = np.array([1.0, 2.0, 2.0, 4.0])
    xls = np.linalg.lstsq(M, y, rcond=None)[0]
    r = _Rows(3)
    _epigraph_norm(r, 2, np.hstack([M, np.zeros((4, 1))]), -y)
    out.append(Case("least_squares", r.program([0, 0, 1.0]),
                    np.r_[xls, np.linalg.norm(M @ xls - y)]))

    # minimum-norm solution of an underdetermined system
    M = np.array([[1.0, 2.0, 3.0], [0.0, 1.0, -1.0]])
    y = np.array([1.0, 2.0])
    xmn = np.linalg.pinv(M) @ y
    r = _Rows(4)
    r.eq(np.hstack([M, np.zeros((2, 1))]), y)
    _epigraph_norm(r, 3, np.hstack([I3, np.zeros((3, 1))]), np.zeros(3))
    out.append(Case("minimum_norm", r.program([0, 0, 0, 1.0]), np.r_[xmn, np.linalg.norm(xmn)]))

    # linear objective over an ellipse ||D x|| <= 1
    D = np.diag([2.0, 0.5])
    c = np.array([1.0, 1.0])
    r = _Rows(2)
    r.cone(np.vstack([np.zeros(2), D]), np.r_[1.0, 0, 0])
    Di = np.linalg.inv(D)
    out.append(Case("ellipse", r.program(c), -Di @ Di @ c / np.linalg.norm(Di @ c)))

    # distance between two disjoint balls; x = (x1, y1, x2, y2, t)
    p1, p2, r1, r2 = np.array([0.0, 0.0]), np.array([3.0, 4.0]), 1.0, 1.5
    u = (p2 - p1) / 5.0
    r = _Rows(5)
    Sx = np.hstack([I2, np.zeros((2, 3))])
    Sy = np.hstack([np.zeros((2, 2)), I2, np.zeros((2, 1))])
    r.cone(np.vstack([np.zeros(5), Sx]), np.r_[r1, -p1])
    r.cone(np.vstack([np.zeros(5), Sy]), np.r_[r2, -p2])
    _epigraph_norm(r, 4, Sx - Sy, np.zeros(2))
    out.append(Case("ball_distance", r.program([0, 0, 0, 0, 1.0]),
                    np.r_[p1 + r1 * u, p2 - r2 * u, 5.0 - r1 - r2]))

    # hyperbolic constraint x y >= 1
    r = _Rows(2)
    _rotated(r, np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.zeros((1, 2)), const_w=[1.0])
    out.append(Case("hyperbolic", r.program([1.0, 1.0]), np.array([1.0, 1.0])))

    # min t - 2 x  s.t.  x^2 <= t ; x = (x, t)
    r = _Rows(2)
    _rotated(r, np.array([0.0, 1.0]), np.zeros(2), np.array([[1.0, 0.0]]), const_v=1.0)
    out.append(Case("quadratic_epigraph", r.program([-2.0, 1.0]), np.array([1.0, 1.0])))

    # two-dimensional cone |x - 3| <= t with x <= 1
    r = _Rows(2)
    r.le([[1.0, 0.0]], [1.0])
    r.cone(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([0.0, -3.0]))
    out.append(Case("soc_dim2", r.program([0.0, 1.0]), np.array([1.0, 2.0])))

    # geometric median of collinear points: the middle point
    pts = [np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([3.0, 0.0])]
    r = _Rows(5)
    for i, pt in enumerate(pts):
        _epigraph_norm(r, 2 + i, np.hstack([I2, np.zeros((2, 3))]), -pt)
    out.append(Case("median_collinear", r.program([0, 0, 1.0, 1.0, 1.0]),
                    np.array([1.0, 0.0, 1.0, 0.0, 2.0])))

    # Fermat point of an equilateral triangle: the centroid
    pts = [np.array([np.cos(a), np.sin(a)]) for a in (0.0, 2 * np.pi / 3, 4 * np.pi / 3)]
    r = _Rows(5)
    for i, pt in enumerate(pts):
        _epigraph_norm(r, 2 + i, np.hstack([I2, np.zeros((2, 3))]), -pt)
    out.append(Case("fermat_equilateral", r.program([0, 0, 1.0, 1.0, 1.0]),
                    np.array([0.0, 0.0, 1.0, 1.0, 1.0])))

    # nonnegative projection via a quadratic epigraph: min t/2, ||x - a||^2 <= t, x >= 0
    a = np.array([1.5, -2.0, 0.25])
    r = _Rows(4)
    r.le(-np.hstack([I3, np.zeros((3, 1))]), np.zeros(3))
    _rotated(r, np.r_[0, 0, 0, 1.0], np.zeros(4), np.hstack([I3, np.zeros((3, 1))]),
             const_v=1.0, const_w=-a)
    xp = np.maximum(a, 0.0)
    out.append(Case("nonneg_projection", r.program([0, 0, 0, 0.5]),
                    np.r_[xp, np.sum((xp - a) ** 2)]))

    # the same ball constraint stated twice
    c = np.array([2.0, -1.0, 2.0])
    r = _Rows(3)
    for _ in range(2):
        r.cone(np.vstack([np.zeros(3), I3]), np.r_[1.0, 0, 0, 0])
    out.append(Case("duplicated_cone", r.program(c), -c / 3.0))

    # minimum norm on a hyperplane stated twice (scaled copy)
    av = np.array([1.0, 2.0, 2.0])
    r = _Rows(4)
    r.eq([np.r_[av, 0.0], np.r_[2.0 * av, 0.0]], [1.0, 2.0])
    _epigraph_norm(r, 3, np.hstack([I3, np.zeros((3, 1))]), np.zeros(3))
    out.append(Case("duplicated_equality_norm", r.program([0, 0, 0, 1.0]),
                    np.r_[av / 9.0, 1.0 / 3.0]))

    return out
