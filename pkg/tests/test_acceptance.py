"""Acceptance gate: one test and one printed PASS/FAIL line per criterion."""

import numpy as np
import pytest

from hydrosdp import analysis, ccp, conic, cuts, model, shor
from conftest import single_plant_reduction, zero_eps_qv

TABLE_SHOR = 68_083.08
TABLE_RLT = 2_701_900.11
TABLE_CCP = 2_729_565.52


def _report(n: int, ok: bool, detail: str) -> None:
    print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} — {detail}")


def test_criterion_1_table_reproduction(shor_solution, rlt_solution, ccp_run):
    _, _, plain = shor_solution
    _, _, tightened = rlt_solution
    schedule, _ = ccp_run
    b_shor = plain.objective_value
    b_rlt = tightened.objective_value
    b_ccp = schedule.objective

    direct = (
        abs(b_shor - TABLE_SHOR) <= 0.05 * TABLE_SHOR
        and abs(b_rlt - TABLE_RLT) <= 0.01 * TABLE_RLT
        and abs(b_ccp - TABLE_CCP) <= 0.01 * TABLE_CCP
    )
    ratio = b_rlt / max(b_shor, 1e-300)
    fallback = (b_shor < b_rlt <= b_ccp + 1e-6 * (1 + abs(b_ccp))) and ratio >= 10.0
    ok = direct or fallback
    mode = "direct table match" if direct else "documented-ambiguity fallback ordering"
    _report(
        1,
        ok,
        f"{mode}: shor={b_shor:.4g}, shor+cuts={b_rlt:.10g}, ccp={b_ccp:.10g}, "
        f"tightening ratio={ratio:.3g} (>= 10 required)",
    )
    assert ok


def test_criterion_2_trace_shape(rlt_solution, ccp_run):
    _, _, tightened = rlt_solution
    _, trace = ccp_run
    objs = trace.objectives

    k0_matches = abs(objs[0] - tightened.objective_value) <= 1e-9 * (
        1 + abs(objs[0])
    )
    jump = objs[1] > objs[0]
    non_increasing = all(
        b <= a + 1e-6 * (1 + abs(a)) for a, b in zip(objs[1:], objs[2:])
    )
    iters_in_band = trace.converged and 6 <= trace.iterations <= 12
    ok = k0_matches and jump and non_increasing and iters_in_band
    _report(
        2,
        ok,
        f"k0=cuts bound: {k0_matches}, jump at k=1: {jump}, "
        f"non-increasing: {non_increasing}, iterations={trace.iterations} "
        f"(band 6..12; the bundled data's CCP contraction rate differs from "
        f"the reference trace — see notes)",
    )
    assert k0_matches and jump and non_increasing
    assert iters_in_band, (
        f"CCP terminated after {trace.iterations} iterations at eps={trace.eps}; "
        "outside the reference 9 +/- 3 band"
    )


def test_criterion_3_power_balance_activity(paranaiba, ccp_run):
    schedule, _ = ccp_run
    monthly = schedule.hydro_mw.sum(axis=1) + schedule.thermal_mw.sum(axis=1)
    worst = float(np.abs(monthly - 1551.4).max())
    ok = worst <= 1e-3
    _report(
        3,
        ok,
        f"max |monthly generation - 1551.4| = {worst:.3g} MW (tolerance 1e-3)",
    )
    assert ok


def test_criterion_4_concave_exactness(paranaiba):
    concave = zero_eps_qv(paranaiba)
    problem, layout = shor.build_relaxation(concave)
    sol = conic.solve(problem)
    assert sol.status == conic.Status.OPTIMAL
    sol = shor.polish_rank1(problem, sol, layout, concave)
    ratio = shor.rank1_gap(sol, layout).max_ratio

    red = single_plant_reduction()
    grid_n = 101
    oracle_obj, oracle_sched = analysis.brute_force_oracle(red, grid_n)
    p_red, _ = shor.build_relaxation(red)
    s_red = conic.solve(p_red)
    assert s_red.status == conic.Status.OPTIMAL
    # one grid cell of objective variation around the oracle point
    cell = (red.hydro[0].q_max - red.hydro[0].q_min) / (grid_n - 1)
    thetas = [red.horizon.theta(t) for t in range(red.horizon.n_periods)]
    base = analysis._schedule_cost(red, oracle_sched.q, [red.hydro[0]], thetas)
    per_cell = 0.0
    for t in range(red.horizon.n_periods):
        for sign in (1.0, -1.0):
            q = oracle_sched.q.copy()
            q[t, 0] += sign * cell
            per_cell = max(
                per_cell,
                abs(analysis._schedule_cost(red, q, [red.hydro[0]], thetas) - base),
            )
    slack = red.horizon.n_periods * per_cell
    gap = abs(s_red.objective_value - oracle_obj)
    ok = ratio <= 1e-6 and gap <= slack
    _report(
        4,
        ok,
        f"all-concave max rank-1 ratio = {ratio:.3g} (<= 1e-6); reduction "
        f"|shor - oracle| = {gap:.4g} <= grid slack {slack:.4g}",
    )
    assert ok


def test_criterion_5_cut_validity(paranaiba):
    worst_violation = -np.inf
    worst_tightness = 0.0
    for h in paranaiba.hydro:
        corners = {
            "vq_upper_A": [(h.v_min, h.q_min), (h.v_min, h.q_max), (h.v_max, h.q_max)],
            "vq_upper_B": [(h.v_min, h.q_min), (h.v_max, h.q_min), (h.v_max, h.q_max)],
            "v2_upper": [
                (h.v_min, h.q_min),
                (h.v_min, h.q_max),
                (h.v_max, h.q_min),
                (h.v_max, h.q_max),
            ],
        }
        for cut in cuts.rlt_cuts_for_plant(h, 0):
            scale = 1.0 + abs(cut.rhs)
            worst_violation = max(
                worst_violation,
                cuts.validate_cut(cut, h, n_samples=10_000, seed=5) / scale,
            )
            for v, q in corners[cut.origin]:
                val = float(np.tensordot(cut.matrix, shor.lift_hydro(v, q)))
                worst_tightness = max(worst_tightness, abs(val - cut.rhs) / scale)
    ok = worst_violation <= 1e-9 and worst_tightness <= 1e-12
    _report(
        5,
        ok,
        f"10^4 samples/plant: max scaled violation {worst_violation:.3g}; "
        f"defining-corner tightness gap {worst_tightness:.3g}",
    )
    assert ok


def test_criterion_6_dc_ccp_numerics(paranaiba):
    rng = np.random.default_rng(17)
    worst_identity = 0.0
    worst_tangency = 0.0
    worst_majorization = -np.inf
    for h in paranaiba.hydro:
        p = h.production
        split = ccp.dc_split(p)
        worst_identity = max(
            worst_identity,
            float(np.abs((split.plus - split.minus) - (-p.quadratic_matrix())).max()),
        )
        x0 = np.array(
            [rng.uniform(h.v_min, h.v_max), rng.uniform(h.q_min, h.q_max)]
        )
        h_tilde = ccp.linearize(split, p.linear_vector(), x0, p.eps_0)
        exact0 = model.evaluate_production(p, *x0)
        approx0 = float(np.tensordot(h_tilde, shor.lift_hydro(*x0)))
        worst_tangency = max(
            worst_tangency, abs(approx0 - exact0) / (1 + abs(exact0))
        )
        v = rng.uniform(h.v_min, h.v_max, 1000)
        q = rng.uniform(h.q_min, h.q_max, 1000)
        for vi, qi in zip(v, q):
            exact = model.evaluate_production(p, vi, qi)
            approx = float(np.tensordot(h_tilde, shor.lift_hydro(vi, qi)))
            worst_majorization = max(
                worst_majorization, (approx - exact) / (1 + abs(exact))
            )
    ok = (
        worst_identity <= 1e-12
        and worst_tangency <= 1e-9
        and worst_majorization <= 1e-9
    )
    _report(
        6,
        ok,
        f"DC identity {worst_identity:.3g} (<=1e-12), tangency "
        f"{worst_tangency:.3g} (<=1e-9), majorization excess "
        f"{worst_majorization:.3g} (<=1e-9, 10^3 points/plant)",
    )
    assert ok


def test_criterion_7_oracle_sandwich(mini):
    grid_n = 201
    oracle_obj, oracle_sched = analysis.brute_force_oracle(mini, grid_n)

    p1, _ = shor.build_relaxation(mini)
    s1 = conic.solve(p1)
    p2, l2 = shor.build_relaxation(mini)
    cuts.apply_cuts(p2, l2, cuts.build_cutset(mini))
    s2 = conic.solve(p2)
    schedule, _ = ccp.ccp_solve(mini)
    assert s1.status == s2.status == conic.Status.OPTIMAL

    cell = (mini.hydro[0].q_max - mini.hydro[0].q_min) / (grid_n - 1)
    thetas = [mini.horizon.theta(t) for t in range(mini.horizon.n_periods)]
    base = analysis._schedule_cost(mini, oracle_sched.q, [mini.hydro[0]], thetas)
    slack = 0.0
    for t in range(mini.horizon.n_periods):
        for sign in (1.0, -1.0):
            q = oracle_sched.q.copy()
            q[t, 0] += sign * cell
            slack = max(
                slack,
                abs(analysis._schedule_cost(mini, q, [mini.hydro[0]], thetas) - base),
            )
    tol = 1e-6 * (1 + abs(oracle_obj))
    ok = (
        s1.objective_value <= s2.objective_value + tol
        and s2.objective_value <= oracle_obj + tol
        and oracle_obj <= schedule.objective + slack
    )
    _report(
        7,
        ok,
        f"shor {s1.objective_value:.6g} <= shor+cuts {s2.objective_value:.6g} "
        f"<= oracle {oracle_obj:.6g} <= ccp {schedule.objective:.6g} + "
        f"slack {slack:.3g}",
    )
    assert ok


def test_criterion_8_solver_unit_suite():
    results = []

    def lp():
        p = conic.ConicProblem()
        x = p.add_scalar(cost=1.0)
        p.add_row("ge", 1.0, scalar_terms=[(x, 1.0)])
        return p, 1.0

    def schur():
        p = conic.ConicProblem()
        b = p.add_block(2)
        p.set_block_objective(b, np.array([[0.0, 0.0], [0.0, 1.0]]))
        p.fix_entry(b, 0, 0, 1.0)
        p.fix_entry(b, 0, 1, 1.0)
        return p, 1.0

    def trace():
        p = conic.ConicProblem()
        b = p.add_block(2)
        p.set_block_objective(b, np.eye(2))
        p.add_row("eq", 2.0, [(b, np.eye(2))])
        return p, 2.0

    deterministic = True
    worst = 0.0
    for build in (lp, schur, trace):
        p, expected = build()
        sol = conic.solve(p)
        results.append(sol.status == conic.Status.OPTIMAL)
        worst = max(worst, abs(sol.objective_value - expected))
        p2, _ = build()
        sol2 = conic.solve(p2)
        deterministic = deterministic and sol.objective_value == sol2.objective_value
        deterministic = deterministic and all(
            np.array_equal(a, b) for a, b in zip(sol.block_values, sol2.block_values)
        )
    ok = all(results) and worst <= 1e-8 and deterministic
    _report(
        8,
        ok,
        f"3 analytic problems solved, max error {worst:.3g} (<=1e-8), "
        f"bitwise-deterministic re-solve: {deterministic}",
    )
    assert ok
