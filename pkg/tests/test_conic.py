import numpy as np
import pytest
import scipy.sparse as sp

from slewopt import conic
from conic_cases import _Rows, cases

CASES = cases()
ACCEPT = (conic.OPTIMAL, conic.OPTIMAL_INACCURATE)


def solve_tight(prog):
    return conic.solve(prog, gap_tol=1e-12, feas_tol=1e-12)


def test_there_are_25_cases():
    assert len(CASES) == 25
    assert len({c.name for c in CASES}) == 25


@pytest.mark.parametrize("case", CASES, ids=[c.name for c in CASES])
def test_known_solution(case):
    # constant cone heads give all-zero rows, duplicated rows give rank warnings
    assert all(m.startswith(("rank warning", "1 all-zero", "2 all-zero"))
               for m in conic.validate(case.prog))
    sol = solve_tight(case.prog)
    assert sol.status in ACCEPT
    assert sol.gap <= 1e-8
    n = case.n_check or case.x_star.size
    assert np.abs(sol.x[:n] - case.x_star[:n]).max() <= 1e-6
    assert sol.primal_objective == pytest.approx(case.objective, abs=1e-6)


@pytest.mark.parametrize("case", CASES[:6], ids=[c.name for c in CASES[:6]])
def test_default_tolerances_report_optimal(case):
    sol = conic.solve(case.prog)
    assert sol.optimal
    assert abs(sol.primal_objective - sol.dual_objective) <= 1e-6 * (1 + abs(case.objective))


def test_primal_infeasible():
    r = _Rows(1)
    r.le([[1.0], [-1.0]], [0.0, -1.0])       # x <= 0 and x >= 1
    assert conic.solve(r.program([1.0])).status == conic.INFEASIBLE


def test_infeasible_cone():
    r = _Rows(2)
    r.cone([[0.0, 1.0], [1.0, 0.0]], np.zeros(2))   # |x0| <= x1
    r.le([[0.0, 1.0]], [-1.0])                      # x1 <= -1
    assert conic.solve(r.program([0.0, 0.0])).status == conic.INFEASIBLE


def test_unbounded():
    r = _Rows(1)
    r.le([[-1.0]], [0.0])            # x >= 0, minimize -x
    assert conic.solve(r.program([-1.0])).status == conic.UNBOUNDED


def test_unbounded_along_cone_ray():
    r = _Rows(2)
    r.cone([[0.0, 1.0], [1.0, 0.0]], np.zeros(2))   # |x0| <= x1, minimize -x0
    assert conic.solve(r.program([-1.0, 0.0])).status == conic.UNBOUNDED


def test_validate_messages():
    good = CASES[0].prog
    bad = conic.ConeProgram(np.ones(2), good.A, good.b, good.cones)
    assert any("c has length" in m for m in conic.validate(bad))
    bad = conic.ConeProgram(good.c, good.A, good.b, conic.ConeDims(0, 2))
    assert any("cone dimensions" in m for m in conic.validate(bad))
    zero_row = conic.ConeProgram([1.0], sp.csc_matrix((2, 1)), [0.0, 1.0], conic.ConeDims(0, 2))
    assert any("all-zero" in m for m in conic.validate(zero_row))
    dup = next(c for c in CASES if c.name == "lp_duplicated_equalities")
    assert any(m.startswith("rank warning") for m in conic.validate(dup.prog))


def test_json_round_trip(tmp_path):
    prog = next(c for c in CASES if c.name == "fermat_equilateral").prog
    prog.layout = {"x": (0, (prog.n,))}
    back = conic.ConeProgram.from_json(prog.to_json())
    assert np.array_equal(back.c, prog.c) and np.array_equal(back.b, prog.b)
    assert (back.A != prog.A).nnz == 0
    assert back.cones == prog.cones and back.layout == prog.layout
    path = tmp_path / "prog.json"
    prog.dump(path)
    assert path.stat().st_size > 0


def test_solver_is_deterministic():
    prog = next(c for c in CASES if c.name == "ball_distance").prog
    a, b = conic.solve(prog), conic.solve(prog)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations
