import numpy as np
import pytest

from hydrosdp import conic


def _solve(problem, **kw):
    return conic.solve(problem, conic.SolveOptions(**kw))


def test_lp_min_x_subject_to_x_ge_1():
    p = conic.ConicProblem()
    x = p.add_scalar(cost=1.0)
    p.add_row("ge", 1.0, scalar_terms=[(x, 1.0)])
    sol = _solve(p)
    assert sol.status == conic.Status.OPTIMAL
    assert sol.objective_value == pytest.approx(1.0, abs=1e-8)
    assert sol.scalar_values[x] == pytest.approx(1.0, abs=1e-8)


def test_schur_complement_minimum():
    # min X22 s.t. X11 = 1, X12 = 1, X PSD  ->  X22 = X12^2 / X11 = 1
    p = conic.ConicProblem()
    b = p.add_block(2)
    p.set_block_objective(b, np.array([[0.0, 0.0], [0.0, 1.0]]))
    p.fix_entry(b, 0, 0, 1.0)
    p.fix_entry(b, 0, 1, 1.0)
    sol = _solve(p)
    assert sol.status == conic.Status.OPTIMAL
    assert sol.objective_value == pytest.approx(1.0, abs=1e-8)
    assert sol.block_values[b][1, 1] == pytest.approx(1.0, abs=1e-7)


def test_trace_problem():
    # min trace(X) s.t. X11 + X22 = 2  ->  objective 2
    p = conic.ConicProblem()
    b = p.add_block(2)
    p.set_block_objective(b, np.eye(2))
    p.add_row("eq", 2.0, [(b, np.eye(2))])
    sol = _solve(p)
    assert sol.status == conic.Status.OPTIMAL
    assert sol.objective_value == pytest.approx(2.0, abs=1e-8)


def test_optimal_invariants_hold():
    p = conic.ConicProblem()
    b = p.add_block(2)
    s = p.add_scalar(cost=0.5)
    p.set_block_objective(b, np.eye(2))
    p.add_row("eq", 2.0, [(b, np.eye(2))])
    p.add_row("ge", 1.0, scalar_terms=[(s, 1.0)])
    sol = _solve(p)
    assert sol.status == conic.Status.OPTIMAL
    assert sol.residuals.primal <= 1e-8
    assert 0.0 <= sol.residuals.gap <= 1e-8
    ok, lam_min = conic.psd_check(sol.block_values[b])
    assert ok
    assert sol.scalar_values[s] >= -1e-8


def test_deterministic_resolve_bitwise():
    def build():
        p = conic.ConicProblem()
        b = p.add_block(3)
        p.set_block_objective(b, np.diag([1.0, 2.0, 3.0]))
        p.add_row("eq", 3.0, [(b, np.eye(3))])
        p.add_row("ge", 0.5, [(b, np.array([[0, 0.5, 0], [0.5, 0, 0], [0, 0, 0]]))])
        return p

    s1 = conic.solve(build())
    s2 = conic.solve(build())
    assert s1.objective_value == s2.objective_value
    for a, b_ in zip(s1.block_values, s2.block_values):
        assert np.array_equal(a, b_)
    assert np.array_equal(s1.scalar_values, s2.scalar_values)


def test_infeasible_detected():
    p = conic.ConicProblem()
    x = p.add_scalar(cost=1.0)
    p.add_row("ge", 1.0, scalar_terms=[(x, 1.0)])
    p.add_row("le", 0.0, scalar_terms=[(x, 1.0)])
    sol = _solve(p)
    assert sol.status == conic.Status.INFEASIBLE


def test_unbounded_detected():
    p = conic.ConicProblem()
    x = p.add_scalar(cost=-1.0)
    p.add_row("ge", 1.0, scalar_terms=[(x, 1.0)])
    sol = _solve(p)
    assert sol.status == conic.Status.UNBOUNDED


def test_random_feasible_problems():
    rng = np.random.default_rng(42)
    for trial in range(5):
        p = conic.ConicProblem()
        b = p.add_block(3)
        # known feasible PSD point
        a = rng.normal(size=(3, 3))
        x0 = a @ a.T + 0.1 * np.eye(3)
        cost = rng.normal(size=(3, 3))
        cost = (cost + cost.T) / 2
        p.set_block_objective(b, cost)
        # constraints consistent with x0; trace row keeps the problem bounded
        p.add_row("eq", float(np.trace(x0)), [(b, np.eye(3))])
        for _ in range(3):
            m = rng.normal(size=(3, 3))
            m = (m + m.T) / 2
            p.add_row("ge", float(np.tensordot(m, x0)) - 1.0, [(b, m)])
        sol = _solve(p)
        assert sol.status == conic.Status.OPTIMAL, f"trial {trial}: {sol.status}"
        assert sol.objective_value <= float(np.tensordot(cost, x0)) + 1e-6


def test_psd_check_examples():
    ok, lam = conic.psd_check(np.eye(2))
    assert ok and lam == pytest.approx(1.0)
    ok, lam = conic.psd_check(np.diag([1.0, -1.0]))
    assert not ok and lam == pytest.approx(-1.0)
    ok, lam = conic.psd_check(np.ones((2, 2)))
    assert ok and lam == pytest.approx(0.0, abs=1e-12)


def test_fix_entry_offdiagonal_convention():
    p = conic.ConicProblem()
    b = p.add_block(2)
    p.fix_entry(b, 0, 1, 3.0)
    row = p.rows[-1]
    mat = dict(row.block_terms)[b]
    assert mat[0, 1] == 0.5 and mat[1, 0] == 0.5
    assert row.rhs == 3.0


def test_solve_rejects_empty_problem():
    with pytest.raises(ValueError):
        conic.solve(conic.ConicProblem())


def test_export_sdpa_roundtrip_format(tmp_path):
    p = conic.ConicProblem()
    b = p.add_block(2)
    s = p.add_scalar(cost=1.0)
    p.set_block_objective(b, np.eye(2))
    p.add_row("eq", 2.0, [(b, np.eye(2))])
    p.add_row("ge", 1.0, scalar_terms=[(s, 1.0)])
    path = tmp_path / "out.dat-s"
    conic.export_sdpa(p, path)
    text = path.read_text()
    assert "2 = mDIM" in text
    assert "2 = nBLOCK" in text
    assert "{2, -1}" in text
    # determinism: exporting again is byte-identical
    path2 = tmp_path / "out2.dat-s"
    conic.export_sdpa(p, path2)
    assert path.read_bytes() == path2.read_bytes()
