"""Penalized trust-region sequential convex programming.

Each iteration linearizes and discretizes the dynamics about the previous
solution, solves the resulting cone program and measures

    J_vc = w_vc * sum_k ||v_k||_1                (virtual-control penalty)
    J_tr = sum_k ||w_tr * (z_k - zbar_k)||_2     (change from the nominal)

on the scaled variables.  The loop stops (``converged``) once both are below
their tolerances, or after ``N_max`` iterations.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import conic
from .dynamics import IQ, NU, NX, SatelliteParams
from .quaternion import angle_between, slerp
from .transcription import (NZ, DecisionStack, PointingScheduleSpec, ScalingMap,
                            assemble_min_time, assemble_multi_target, decode,
                            discretize_foh)

log = logging.getLogger(__name__)

MIN_TIME = "min_time"
MULTI_TARGET = "multi_target"


@dataclass
class ScpConfig:
    """SCP, transcription and subproblem-solver settings.

    Defaults are the minimum-time settings; :meth:`multi_target` gives the
    fixed-time pointing defaults.
    """

    K: int = 30
    N_max: int = 20
    w_vc: float = 1e5
    w_tr: float = 1e-1
    eps_vc: float = 1e-5
    eps_tr: float = 1e-5
    gamma: float = 1e5
    rho: float = 1.0
    t_f: float | None = None
    t_min_floor: float = 0.1
    w_max: float | None = None
    trust_region: str = "squared"
    tr_growth: float = 3.0
    tr_stall: float = 1e-3
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    solver_max_iters: int = 100

    def __post_init__(self):
        for name in ("w_vc", "w_tr", "eps_vc", "eps_tr", "gamma", "rho", "t_min_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.N_max < 1:
            raise ValueError("N_max must be at least 1")
        if self.t_f is not None and self.t_f <= 0:
            raise ValueError("t_f must be positive")

    @classmethod
    def multi_target(cls, **kw) -> "ScpConfig":
        base = dict(K=601, eps_vc=1e-3, eps_tr=1e-4, t_f=600.0)
        base.update(kw)
        return cls(**base)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScpConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown SCP config keys: {', '.join(unknown)}")
        return cls(**d)


@dataclass
class ScpResult:
    kind: str
    converged: bool
    iterations: int
    history: list
    stack: DecisionStack
    status: str = "converged"
    solver_status: str | None = None
    failed_iteration: int | None = None
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def tf(self) -> float:
        return self.stack.tf

    @property
    def J_vc(self) -> float:
        return self.history[-1]["J_vc"] if self.history else np.nan

    @property
    def J_tr(self) -> float:
        return self.history[-1]["J_tr"] if self.history else np.nan

    def history_json(self) -> str:
        return json.dumps({"kind": self.kind, "converged": self.converged,
                           "status": self.status, "iterations": self.iterations,
                           "history": self.history}, indent=1)


def initial_guess(q0, qf, K: int, t_f_guess: float) -> DecisionStack:
    """SLERP attitude between the endpoints, all rates, momenta and torques zero."""
    X = np.zeros((K, NX))
    for k, s in enumerate(np.linspace(0.0, 1.0, K)):
        X[k, IQ] = slerp(q0, qf, s)
    return DecisionStack(X, np.zeros((K, NU)), t_f_guess)


def schedule_initial_guess(q0, spec: PointingScheduleSpec, K: int) -> DecisionStack:
    """Piecewise SLERP through the scheduled attitudes, held after the last one."""
    knots = [(0, np.asarray(q0, dtype=float))]
    for k, q in sorted(zip(spec.q_nodes.tolist(), spec.q_des), key=lambda a: a[0]):
        if k == knots[-1][0]:
            knots[-1] = (k, q)
        else:
            knots.append((k, q))
    X = np.zeros((K, NX))
    for (ka, qa), (kb, qb) in zip(knots[:-1], knots[1:]):
        for k in range(ka, kb + 1):
            X[k, IQ] = slerp(qa, qb, (k - ka) / (kb - ka))
    X[:knots[0][0] + 1, IQ] = knots[0][1]
    X[knots[-1][0]:, IQ] = knots[-1][1]
    return DecisionStack(X, np.zeros((K, NU)), spec.t_f)


def min_time_guess(q0, qf, p: SatelliteParams) -> float:
    """Eigenaxis bang-bang time with the largest inertia and the weakest
    principal-axis torque, plus a 20% margin."""
    theta = angle_between(q0, qf)
    _, _, torques = p.principal_torque_authority()
    return 1.2 * 2.0 * np.sqrt(theta * np.linalg.eigvalsh(p.J)[-1] / np.min(torques))


def evaluate_penalties(current: DecisionStack, previous: DecisionStack, cfg: ScpConfig,
                       smap: ScalingMap, include_tf: bool = True) -> dict:
    """``J_vc`` and ``J_tr`` of ``current`` relative to ``previous``."""
    if current.X.shape != previous.X.shape:
        raise ValueError("stacks have different shapes")
    J_vc = cfg.w_vc * float(np.sum(np.abs(current.V)))
    d = smap.to_scaled(current.nodes()) - smap.to_scaled(previous.nodes())
    if not include_tf:
        d = d[:, :NZ]
    J_tr = float(np.sum(np.linalg.norm(cfg.w_tr * d, axis=1)))
    return {"J_vc": J_vc, "J_tr": J_tr}


def run(kind: str, inputs: dict, cfg: ScpConfig, p: SatelliteParams) -> ScpResult:
    """Iterate subproblems from ``inputs["guess"]`` until convergence.

    ``inputs`` holds ``guess`` (DecisionStack) and, for ``min_time``,
    ``x_initial`` and ``q_final``; for ``multi_target``, ``spec`` and
    ``x_initial``.
    """
    if kind not in (MIN_TIME, MULTI_TARGET):
        raise ValueError(f"unknown problem kind {kind!r}")
    t_start = time.perf_counter()
    nominal = inputs["guess"].copy()
    x_initial = np.asarray(inputs.get("x_initial", nominal.X[0]), dtype=float)
    if kind == MIN_TIME:
        q_final = np.asarray(inputs.get("q_final", nominal.X[-1, IQ]), dtype=float)
        smap = inputs.get("smap") or ScalingMap.from_params(p, max(nominal.tf, 1.0))
    else:
        spec = inputs["spec"]
        nominal.tf = spec.t_f
        smap = inputs.get("smap") or ScalingMap.from_params(p, spec.t_f)
        eps_q = inputs.get("eps_q", np.inf)
        eps_w = inputs.get("eps_w", np.inf)

    history = []
    w_sub = cfg.w_tr
    for it in range(1, cfg.N_max + 1):
        ltv = discretize_foh(nominal, p)
        sub_cfg = replace(cfg, w_tr=w_sub)
        if kind == MIN_TIME:
            prog = assemble_min_time(nominal, p, sub_cfg, x_initial, q_final, ltv, smap)
        else:
            prog = assemble_multi_target(nominal, spec, p, sub_cfg, x_initial, eps_q, eps_w,
                                         ltv, smap)
        sol = conic.solve(prog, gap_tol=cfg.gap_tol, feas_tol=cfg.feas_tol,
                          max_iters=cfg.solver_max_iters)
        if sol.status != conic.OPTIMAL:
            log.warning("subproblem %d returned %s", it, sol.status)
            return ScpResult(kind, False, it, history, nominal, status="solver_failure",
                             solver_status=sol.status, failed_iteration=it,
                             wall_time=time.perf_counter() - t_start,
                             extra={"program": prog})
        new = decode(prog, sol.x, smap, None if kind == MIN_TIME else spec.t_f)
        pen = evaluate_penalties(new, nominal, cfg, smap, include_tf=kind == MIN_TIME)
        history.append({"iteration": it, "J_vc": pen["J_vc"], "J_tr": pen["J_tr"],
                        "objective": float(sol.primal_objective), "t_f": new.tf,
                        "solver_iterations": sol.iterations, "w_tr": w_sub})
        if len(history) > 1 and pen["J_vc"] <= cfg.eps_vc:
            prev = history[-2]["objective"]
            if abs(sol.primal_objective - prev) <= cfg.tr_stall * max(abs(prev), 1.0):
                # objective has stalled while the iterate still drifts
                w_sub *= cfg.tr_growth
        log.info("scp %2d  J_vc %.3e  J_tr %.3e  obj %.6f  tf %.4f", it, pen["J_vc"],
                 pen["J_tr"], sol.primal_objective, new.tf)
        nominal = new
        if pen["J_vc"] <= cfg.eps_vc and pen["J_tr"] <= cfg.eps_tr:
            return ScpResult(kind, True, it, history, nominal,
                             wall_time=time.perf_counter() - t_start)
    return ScpResult(kind, False, cfg.N_max, history, nominal, status="max_iters",
                     wall_time=time.perf_counter() - t_start)


def solve_min_time(q0, qf, p: SatelliteParams, cfg: ScpConfig | None = None,
                   t_f_guess: float | None = None) -> ScpResult:
    """Rest-to-rest minimum-time slew from ``q0`` to ``qf``."""
    cfg = cfg or ScpConfig()
    q0 = np.asarray(q0, dtype=float)
    qf = np.asarray(qf, dtype=float)
    if t_f_guess is None:
        t_f_guess = max(min_time_guess(q0, qf, p), cfg.t_min_floor)
    guess = initial_guess(q0, qf, cfg.K, t_f_guess)
    x0 = np.zeros(NX)
    x0[IQ] = q0
    return run(MIN_TIME, {"guess": guess, "x_initial": x0, "q_final": qf}, cfg, p)


def solve_multi_target(q0, spec: PointingScheduleSpec, p: SatelliteParams,
                       cfg: ScpConfig | None = None, eps_q: float = np.inf,
                       eps_w: float = np.inf) -> ScpResult:
    """Fixed-time pointing trajectory starting at rest at ``q0``."""
    cfg = cfg or ScpConfig.multi_target()
    guess = schedule_initial_guess(q0, spec, cfg.K)
    x0 = np.zeros(NX)
    x0[IQ] = q0
    return run(MULTI_TARGET, {"guess": guess, "x_initial": x0, "spec": spec,
                              "eps_q": eps_q, "eps_w": eps_w}, cfg, p)
