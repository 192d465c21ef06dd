"""Exactness diagnostics, brute-force oracle, and stationarity checks."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import conic, cuts as cuts_mod, shor
from .model import CaseStudy, classify_definiteness, evaluate_production

__all__ = [
    "ExactnessReport",
    "OracleError",
    "maxgen_check",
    "sign_condition_check",
    "brute_force_oracle",
    "stationarity_check",
    "render_exactness_report",
]

ORACLE_POINT_GUARD = 10_000_000


class OracleError(RuntimeError):
    """Oracle refused (intractable size) or found no feasible grid point."""


@dataclass
class ExactnessReport:
    """Diagnostics explaining why (or why not) the relaxation can be exact."""

    maxgen: list[float] = field(default_factory=list)
    maxgen_verdicts: list[bool] = field(default_factory=list)
    sign_condition_flagged: bool = False
    definiteness: dict[str, str] = field(default_factory=dict)
    rank1_ratios: dict[tuple[int, str], float] = field(default_factory=dict)

    @property
    def inequality_relaxation_justified(self) -> bool:
        return bool(self.maxgen_verdicts) and all(self.maxgen_verdicts)


def maxgen_check(
    case: CaseStudy, options: conic.SolveOptions | None = None
) -> list[tuple[float, bool]]:
    """For each period, maximize total hydro generation over the
    cut-tightened hydro feasible set and report whether demand still
    exceeds it plus the thermal floor (so relaxing power balance to an
    inequality cannot create slack at the optimum)."""
    options = options or conic.SolveOptions()
    p_min_total = sum(t.p_min for t in case.thermal)
    cutset = cuts_mod.build_cutset(case)
    out: list[tuple[float, bool]] = []
    for t in range(case.horizon.n_periods):
        problem, layout = shor.build_relaxation(
            case, include_thermal=False, include_power_balance=False
        )
        cuts_mod.apply_cuts(problem, layout, cutset)
        # minimize -sum_h H^h . X^{t,h}  ==  maximize period-t generation
        for h in case.hydro:
            blk = layout.hydro_blocks[(t, h.id)]
            problem.set_block_objective(blk, -shor.production_matrix(h.production))
        sol = conic.solve(problem, options)
        if sol.status != conic.Status.OPTIMAL:
            raise RuntimeError(f"maxgen subproblem t={t} returned {sol.status}")
        maxgen = -sol.objective_value
        out.append((maxgen, case.horizon.load(t) >= p_min_total + maxgen))
    return out


def sign_condition_check(matrices: shor.StructureMatrices) -> bool:
    """True iff V, Q and P are all off-diagonal nonnegative, in which case
    the cited sufficient conditions for relaxation exactness do not apply."""
    for m in (matrices.V, matrices.Q, matrices.P):
        off = m - np.diag(np.diag(m))
        if np.any(off < 0):
            return False
    return True


def _oracle_thermal_cost(case: CaseStudy, hydro_mw: float, t: int) -> tuple[float, float]:
    plant = case.thermal[0]
    p = max(case.horizon.load(t) - hydro_mw, plant.p_min)
    p = min(p, plant.p_max)
    return p, plant.cost(p)


def brute_force_oracle(
    case: CaseStudy, grid_n: int
) -> tuple[float, shor.Schedule]:
    """Grid-enumerate discharges (spillage fixed at 0), propagate volumes
    through the water balance, and return the cheapest feasible schedule.

    Discharges that are pinned by the water balance are solved exactly
    instead of gridded: the last period must hit the final-volume target,
    and run-of-river plants must pass their net inflow through every
    period.  Every returned schedule is therefore exactly feasible, so the
    oracle value upper-bounds the true optimum at any grid resolution.
    """
    if len(case.thermal) != 1:
        raise OracleError("oracle supports exactly one thermal plant")
    T = case.horizon.n_periods
    H = len(case.hydro)
    if grid_n < 2:
        raise OracleError("grid_n must be >= 2")
    free_slots = sum(0 if h.run_of_river else T - 1 for h in case.hydro)
    if float(grid_n) ** free_slots > ORACLE_POINT_GUARD:
        raise OracleError(
            f"grid of {grid_n}^{free_slots} points exceeds guard {ORACLE_POINT_GUARD}"
        )
    # Upstream-first order so each plant's release is known before its
    # downstream neighbours need it; the bundled cases list plants that way
    # already, but do not rely on it.
    original = list(case.hydro)
    order: list[int] = []
    placed: set[str] = set()
    while len(order) < H:
        for i, h in enumerate(original):
            if i not in order and all(u in placed for u in h.upstream):
                order.append(i)
                placed.add(h.id)
    plants = [original[i] for i in order]

    thetas = [case.horizon.theta(t) for t in range(T)]

    best_cost = np.inf
    best_vq: tuple[np.ndarray, np.ndarray] | None = None
    v_work = np.empty((T, H))
    q_work = np.empty((T, H))

    def recurse(t: int, cost_so_far: float) -> None:
        nonlocal best_cost, best_vq
        if t == T:
            if cost_so_far < best_cost:
                best_cost = cost_so_far
                best_vq = (v_work.copy(), q_work.copy())
            return
        if cost_so_far >= best_cost:
            return
        _enumerate_plant(t, 0, 0.0, cost_so_far)

    def _enumerate_plant(t: int, j: int, hydro_mw: float, cost_so_far: float) -> None:
        if j == H:
            _, c = _oracle_thermal_cost(case, hydro_mw, t)
            recurse(t + 1, cost_so_far + c)
            return
        h = plants[j]
        v_prev = h.v_initial if t == 0 else v_work[t - 1, j]
        upstream_q = sum(
            q_work[t, k] for k, other in enumerate(plants) if other.id in h.upstream
        )
        net_in = case.horizon.inflow(t, h.id) + upstream_q
        if t == T - 1 or h.run_of_river:
            # discharge pinned by the water balance (final-volume target or
            # fixed storage); solve it exactly instead of gridding
            v_target = h.v_final if t == T - 1 else v_prev
            q = net_in - (v_target - v_prev) * thetas[t]
            slack = 1e-9 * max(1.0, h.q_max)
            if q < h.q_min - slack or q > h.q_max + slack:
                return
            q = min(max(q, h.q_min), h.q_max)
            v_work[t, j] = v_target
            q_work[t, j] = q
            _enumerate_plant(
                t, j + 1,
                hydro_mw + evaluate_production(h.production, v_target, q),
                cost_so_far,
            )
            return
        # grid the discharge over its state-feasible interval (bounds
        # intersected with what keeps the volume in its box), so coarse
        # grids never miss a narrow feasible window
        q_lo = max(h.q_min, net_in - (h.v_max - v_prev) * thetas[t])
        q_hi = min(h.q_max, net_in - (h.v_min - v_prev) * thetas[t])
        if q_lo > q_hi:
            return
        for q in np.linspace(q_lo, q_hi, grid_n):
            v = v_prev + (net_in - q) / thetas[t]
            v = min(max(v, h.v_min), h.v_max)
            v_work[t, j] = v
            q_work[t, j] = q
            _enumerate_plant(
                t, j + 1, hydro_mw + evaluate_production(h.production, v, q),
                cost_so_far,
            )

    recurse(0, 0.0)
    if best_vq is None:
        raise OracleError("no feasible grid point (check inflows and v_final)")

    v, q = best_vq
    gen = np.array(
        [
            [evaluate_production(plants[j].production, v[t, j], q[t, j]) for j in range(H)]
            for t in range(T)
        ]
    )
    p = np.zeros((T, 1))
    cost = 0.0
    for t in range(T):
        p[t, 0], c = _oracle_thermal_cost(case, float(gen[t].sum()), t)
        cost += c
    schedule = shor.Schedule(
        hydro_ids=tuple(h.id for h in plants),
        thermal_ids=(case.thermal[0].id,),
        v=v,
        q=q,
        s=np.zeros((T, H)),
        hydro_mw=gen,
        thermal_mw=p,
        objective=cost,
    )
    return cost, schedule


def _schedule_cost(case: CaseStudy, q: np.ndarray, plants, thetas) -> float:
    """Cost of a discharge schedule with volumes propagated and thermal
    dispatched to exactly cover residual demand (no feasibility checks)."""
    T, H = q.shape
    total = 0.0
    v_prev = np.array([h.v_initial for h in plants])
    ids = [h.id for h in plants]
    for t in range(T):
        v = np.empty(H)
        hydro_mw = 0.0
        for j, h in enumerate(plants):
            upstream_q = sum(q[t, ids.index(u)] for u in h.upstream)
            v[j] = v_prev[j] + (
                case.horizon.inflow(t, h.id) + upstream_q - q[t, j]
            ) / thetas[t]
            hydro_mw += evaluate_production(h.production, v[j], q[t, j])
        _, c = _oracle_thermal_cost(case, hydro_mw, t)
        total += c
        v_prev = v
    return total


def stationarity_check(
    case: CaseStudy, schedule: shor.Schedule, step: float = 1e-3
) -> float:
    """Most negative cost-improvement rate over feasible water-shifting
    directions (move discharge between consecutive periods, propagated down
    the cascade, thermal rebalanced).  Near zero at a stationary point."""
    if len(case.thermal) != 1:
        raise ValueError("stationarity check supports exactly one thermal plant")
    T = schedule.n_periods
    plants = [case.hydro_by_id(hid) for hid in schedule.hydro_ids]
    thetas = [case.horizon.theta(t) for t in range(T)]
    q0 = schedule.q.copy()
    worst = 0.0
    for j, h in enumerate(plants):
        delta = step * max(h.q_max - h.q_min, 1.0)
        if delta == 0.0:
            continue
        cols = [schedule.hydro_index(pid) for pid in case.downstream_closure(h.id)]
        for t in range(T - 1):
            ratio = thetas[t + 1] / thetas[t]

            def perturbed(sign: float) -> np.ndarray:
                q = q0.copy()
                for c in cols:
                    q[t, c] += sign * delta
                    q[t + 1, c] -= sign * ratio * delta
                return q

            ok = all(
                case.hydro_by_id(schedule.hydro_ids[c]).q_min
                <= q0[t, c] - delta
                and q0[t, c] + delta
                <= case.hydro_by_id(schedule.hydro_ids[c]).q_max
                and case.hydro_by_id(schedule.hydro_ids[c]).q_min
                <= q0[t + 1, c] - ratio * delta
                and q0[t + 1, c] + ratio * delta
                <= case.hydro_by_id(schedule.hydro_ids[c]).q_max
                for c in cols
            )
            if not ok:
                continue
            f_plus = _schedule_cost(case, perturbed(+1.0), plants, thetas)
            f_minus = _schedule_cost(case, perturbed(-1.0), plants, thetas)
            deriv = (f_plus - f_minus) / (2.0 * delta)
            # Either sign of the direction is feasible, so any nonzero
            # derivative is an improvement opportunity.
            worst = min(worst, -abs(deriv))
    return worst


def render_exactness_report(report: ExactnessReport) -> str:
    buf = io.StringIO()
    buf.write("section,key,value\n")
    for t, (g, ok) in enumerate(zip(report.maxgen, report.maxgen_verdicts)):
        buf.write(f"maxgen,period_{t},{g:.6g}\n")
        buf.write(f"maxgen_verdict,period_{t},{ok}\n")
    buf.write(
        "sign_condition,off_diagonal_nonnegative,"
        f"{report.sign_condition_flagged}\n"
    )
    if report.sign_condition_flagged:
        buf.write(
            "sign_condition,implication,"
            "cited exactness sufficient conditions do not apply\n"
        )
    for pid, cls in report.definiteness.items():
        buf.write(f"definiteness,{pid},{cls}\n")
    for (t, pid), ratio in sorted(report.rank1_ratios.items()):
        buf.write(f"rank1_ratio,{pid}_period_{t},{ratio:.6g}\n")
    return buf.getvalue()


def build_exactness_report(
    case: CaseStudy,
    *,
    rank1_ratios: dict[tuple[int, str], float] | None = None,
    options: conic.SolveOptions | None = None,
) -> ExactnessReport:
    pairs = maxgen_check(case, options)
    return ExactnessReport(
        maxgen=[g for g, _ in pairs],
        maxgen_verdicts=[ok for _, ok in pairs],
        sign_condition_flagged=sign_condition_check(
            shor.StructureMatrices.for_case(case)
        ),
        definiteness={h.id: classify_definiteness(h.production) for h in case.hydro},
        rank1_ratios=rank1_ratios or {},
    )
