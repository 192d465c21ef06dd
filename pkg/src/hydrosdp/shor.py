"""Shor semidefinite relaxation of the hydro-thermal coordination problem.

Builds the lifted block SDP from a CaseStudy, extracts schedules from
solutions, measures rank-1 gaps, optionally certifies a rank-1 solution,
and verifies schedules against the original constraints.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .model import CaseStudy, HydroPlant, ProductionQuadratic, ThermalPlant, evaluate_production

__all__ = [
    "V_MAT",
    "Q_MAT",
    "P_MAT",
    "LiftedLayout",
    "StructureMatrices",
    "Schedule",
    "VerificationReport",
    "Rank1Report",
    "ExtractionError",
    "production_matrix",
    "cost_matrix",
    "lift_hydro",
    "lift_thermal",
    "build_relaxation",
    "extract_schedule",
    "rank1_gap",
    "polish_rank1",
    "verify_schedule",
    "schedule_generation_csv",
    "schedule_trajectory_csv",
]

# Frobenius selectors over the lifted blocks; [v, q, 1] and [p, 1] orderings.
V_MAT = np.array([[0.0, 0.0, 0.5], [0.0, 0.0, 0.0], [0.5, 0.0, 0.0]])
Q_MAT = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.5], [0.0, 0.5, 0.0]])
P_MAT = np.array([[0.0, 0.5], [0.5, 0.0]])


class ExtractionError(RuntimeError):
    """Lifted diagonal was negative beyond tolerance during recovery."""


@dataclass(frozen=True)
class StructureMatrices:
    """The fixed selector matrices plus per-plant production/cost blocks."""

    V: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    H: dict[str, np.ndarray]
    C: dict[str, np.ndarray]

    @classmethod
    def for_case(cls, case: CaseStudy) -> "StructureMatrices":
        return cls(
            V=V_MAT.copy(),
            Q=Q_MAT.copy(),
            P=P_MAT.copy(),
            H={h.id: production_matrix(h.production) for h in case.hydro},
            C={t.id: cost_matrix(t) for t in case.thermal},
        )


@dataclass(frozen=True)
class LiftedLayout:
    hydro_blocks: dict[tuple[int, str], int]
    thermal_blocks: dict[tuple[int, str], int]
    spill_scalars: dict[tuple[int, str], int]
    hydro_ids: tuple[str, ...]
    thermal_ids: tuple[str, ...]
    n_periods: int


def production_matrix(p: ProductionQuadratic) -> np.ndarray:
    """3x3 symmetric matrix whose Frobenius product with a lifted block
    reproduces the production polynomial (border carries half the linear
    coefficients so each is counted once through the symmetric pair)."""
    return np.array(
        [
            [p.eps_vv, p.eps_qv / 2.0, p.eps_v / 2.0],
            [p.eps_qv / 2.0, p.eps_qq, p.eps_q / 2.0],
            [p.eps_v / 2.0, p.eps_q / 2.0, p.eps_0],
        ]
    )


def cost_matrix(t: ThermalPlant) -> np.ndarray:
    """2x2 matrix with C • Y = c2 p^2 + c1 p + c0 on a lifted [p, 1] block."""
    return np.array([[t.c2, t.c1 / 2.0], [t.c1 / 2.0, t.c0]])


def lift_hydro(v: float, q: float) -> np.ndarray:
    x = np.array([v, q, 1.0])
    return np.outer(x, x)


def lift_thermal(p: float) -> np.ndarray:
    x = np.array([p, 1.0])
    return np.outer(x, x)


def build_relaxation(
    case: CaseStudy,
    *,
    h_tilde: dict[tuple[int, str], np.ndarray] | None = None,
    include_thermal: bool = True,
    include_power_balance: bool = True,
) -> tuple[conic.ConicProblem, LiftedLayout]:
    """Assemble the lifted relaxation of a case.

    ``h_tilde`` substitutes per-(period, plant) 3x3 matrices for the
    production matrix in the power-balance rows (used by the convex-concave
    iterations).  ``include_thermal``/``include_power_balance`` allow the
    hydro-only feasibility region to be built for diagnostics.
    """
    problem = conic.ConicProblem()
    T = case.horizon.n_periods
    hydro_ids = tuple(h.id for h in case.hydro)
    thermal_ids = tuple(t.id for t in case.thermal) if include_thermal else ()

    hydro_blocks: dict[tuple[int, str], int] = {}
    thermal_blocks: dict[tuple[int, str], int] = {}
    spill_scalars: dict[tuple[int, str], int] = {}

    for t in range(T):
        for h in case.hydro:
            scale = [max(h.v_max, 1.0), max(h.q_max, 1.0), 1.0]
            hydro_blocks[(t, h.id)] = problem.add_block(3, scale=scale)
    if include_thermal:
        for t in range(T):
            for tp in case.thermal:
                scale = [max(tp.p_max, 1.0), 1.0]
                thermal_blocks[(t, tp.id)] = problem.add_block(2, scale=scale)
    for t in range(T):
        for h in case.hydro:
            spill_scalars[(t, h.id)] = problem.add_scalar(
                scale=max(h.q_max, 1.0)
            )

    layout = LiftedLayout(
        hydro_blocks=hydro_blocks,
        thermal_blocks=thermal_blocks,
        spill_scalars=spill_scalars,
        hydro_ids=hydro_ids,
        thermal_ids=thermal_ids,
        n_periods=T,
    )

    # homogenization corners pinned to 1
    for (t, hid), blk in hydro_blocks.items():
        problem.fix_entry(blk, 2, 2, 1.0)
    for (t, tid), blk in thermal_blocks.items():
        problem.fix_entry(blk, 1, 1, 1.0)

    # objective: total thermal cost
    if include_thermal:
        for t in range(T):
            for tp in case.thermal:
                problem.set_block_objective(
                    thermal_blocks[(t, tp.id)], cost_matrix(tp)
                )

    # power balance (inequality form)
    if include_power_balance:
        for t in range(T):
            terms = []
            for h in case.hydro:
                mat = None
                if h_tilde is not None:
                    mat = h_tilde.get((t, h.id))
                if mat is None:
                    mat = production_matrix(h.production)
                terms.append((hydro_blocks[(t, h.id)], mat))
            for tid in thermal_ids:
                terms.append((thermal_blocks[(t, tid)], P_MAT))
            problem.add_row("ge", case.horizon.load(t), terms)

    # water balance, with the t=0 storage term moved to the right-hand side
    for t in range(T):
        theta_t = case.horizon.theta(t)
        for h in case.hydro:
            terms = [(hydro_blocks[(t, h.id)], theta_t * V_MAT + Q_MAT)]
            scalars = [(spill_scalars[(t, h.id)], 1.0)]
            rhs = case.horizon.inflow(t, h.id)
            if t == 0:
                rhs += theta_t * h.v_initial
            else:
                terms.append((hydro_blocks[(t - 1, h.id)], -theta_t * V_MAT))
            for up in sorted(h.upstream):
                terms.append((hydro_blocks[(t, up)], -Q_MAT))
                scalars.append((spill_scalars[(t, up)], -1.0))
            problem.add_row("eq", rhs, terms, scalars)

    # storage / discharge / thermal bounds; degenerate boxes (run-of-river
    # storage) become a single equality so the relaxation keeps an interior
    def add_box(blk: int, mat: np.ndarray, lo: float, hi: float) -> None:
        if lo == hi:
            problem.add_row("eq", lo, [(blk, mat)])
        else:
            problem.add_row("ge", lo, [(blk, mat)])
            problem.add_row("le", hi, [(blk, mat)])

    for t in range(T):
        for h in case.hydro:
            blk = hydro_blocks[(t, h.id)]
            if t == T - 1:
                # final storage target; subsumes the storage box in the
                # last period (v_final is validated to lie inside the box)
                problem.add_row("eq", h.v_final, [(blk, V_MAT)])
            else:
                add_box(blk, V_MAT, h.v_min, h.v_max)
            add_box(blk, Q_MAT, h.q_min, h.q_max)
        for tid in thermal_ids:
            tp = case.thermal_by_id(tid)
            blk = thermal_blocks[(t, tid)]
            add_box(blk, P_MAT, tp.p_min, tp.p_max)

    return problem, layout


@dataclass
class Schedule:
    """Recovered decision variables in original units."""

    hydro_ids: tuple[str, ...]
    thermal_ids: tuple[str, ...]
    v: np.ndarray          # (T, H) hm^3
    q: np.ndarray          # (T, H) m^3/s
    s: np.ndarray          # (T, H) m^3/s
    hydro_mw: np.ndarray   # (T, H)
    thermal_mw: np.ndarray  # (T, Tau)
    objective: float

    @property
    def n_periods(self) -> int:
        return self.v.shape[0]

    def hydro_index(self, plant_id: str) -> int:
        return self.hydro_ids.index(plant_id)

    def thermal_index(self, plant_id: str) -> int:
        return self.thermal_ids.index(plant_id)


def _sqrt_diag(value: float, scale: float, what: str) -> float:
    tol = 1e-6 * max(1.0, scale)
    if value < -tol:
        raise ExtractionError(f"negative lifted diagonal for {what}: {value}")
    return float(np.sqrt(max(value, 0.0)))


def extract_schedule(
    sol: conic.ConicSolution, layout: LiftedLayout, case: CaseStudy
) -> Schedule:
    """sqrt-diagonal recovery of (v, q, p) plus spillage scalars."""
    if sol.status != conic.Status.OPTIMAL:
        raise ExtractionError(f"cannot extract from status {sol.status}")
    T, H = layout.n_periods, len(layout.hydro_ids)
    v = np.zeros((T, H))
    q = np.zeros((T, H))
    s = np.zeros((T, H))
    gen = np.zeros((T, H))
    for (t, hid), blk in layout.hydro_blocks.items():
        X = sol.block_values[blk]
        j = layout.hydro_ids.index(hid)
        plant = case.hydro_by_id(hid)
        v[t, j] = _sqrt_diag(X[0, 0], plant.v_max**2, f"v[{t},{hid}]")
        q[t, j] = _sqrt_diag(X[1, 1], plant.q_max**2, f"q[{t},{hid}]")
        gen[t, j] = float(np.tensordot(production_matrix(plant.production), X))
    for (t, hid), idx in layout.spill_scalars.items():
        s[t, layout.hydro_ids.index(hid)] = max(0.0, float(sol.scalar_values[idx]))
    p = np.zeros((T, len(layout.thermal_ids)))
    for (t, tid), blk in layout.thermal_blocks.items():
        Y = sol.block_values[blk]
        tp = case.thermal_by_id(tid)
        p[t, layout.thermal_ids.index(tid)] = _sqrt_diag(
            Y[0, 0], tp.p_max**2, f"p[{t},{tid}]"
        )
    return Schedule(
        hydro_ids=layout.hydro_ids,
        thermal_ids=layout.thermal_ids,
        v=v,
        q=q,
        s=s,
        hydro_mw=gen,
        thermal_mw=p,
        objective=sol.objective_value,
    )


@dataclass(frozen=True)
class Rank1Report:
    ratios: dict[tuple[int, str], float]
    max_ratio: float


def rank1_gap(sol: conic.ConicSolution, layout: LiftedLayout) -> Rank1Report:
    """Per hydro block, the ratio of the two largest eigenvalues (0 = rank 1)."""
    ratios: dict[tuple[int, str], float] = {}
    for key, blk in layout.hydro_blocks.items():
        eigs = np.linalg.eigvalsh(sol.block_values[blk])[::-1]
        lam1 = max(eigs[0], 0.0)
        lam2 = max(eigs[1], 0.0)
        ratios[key] = 0.0 if lam1 <= 0.0 else lam2 / lam1
    return Rank1Report(ratios=ratios, max_ratio=max(ratios.values(), default=0.0))


def polish_rank1(
    problem: conic.ConicProblem,
    sol: conic.ConicSolution,
    layout: LiftedLayout,
    case: CaseStudy,
    feas_tol: float = 1e-7,
) -> conic.ConicSolution:
    """Replace lifted blocks by the rank-1 lift of their border values when
    the replacement remains feasible.

    Linear rows see only the border entries and are unaffected; the swap can
    only change power-balance and cut rows.  When every replaced block keeps
    the solution feasible the polished solution is optimal too (the objective
    cannot increase).  Falls back to replacing only blocks whose production
    has no bilinear term (always safe for ge power balance), and returns the
    solution unchanged if even that fails.
    """
    if sol.status != conic.Status.OPTIMAL:
        return sol

    def candidate(hydro_keys) -> tuple[list[np.ndarray], float]:
        blocks = [b.copy() for b in sol.block_values]
        for key in hydro_keys:
            blk = layout.hydro_blocks[key]
            X = sol.block_values[blk]
            blocks[blk] = lift_hydro(X[0, 2], X[1, 2])
        for key, blk in layout.thermal_blocks.items():
            Y = sol.block_values[blk]
            blocks[blk] = lift_thermal(Y[0, 1])
        obj = problem.objective_value(blocks, sol.scalar_values)
        return blocks, obj

    def acceptable(blocks, obj) -> bool:
        viol = conic.row_violations(problem, blocks, sol.scalar_values)
        scale = np.array([1.0 + abs(r.rhs) for r in problem.rows])
        if float((viol / scale).max(initial=0.0)) > feas_tol:
            return False
        return obj <= sol.objective_value + feas_tol * (1.0 + abs(sol.objective_value))

    all_keys = list(layout.hydro_blocks)
    blocks, obj = candidate(all_keys)
    if not acceptable(blocks, obj):
        safe = [
            (t, hid)
            for (t, hid) in all_keys
            if case.hydro_by_id(hid).production.eps_qv == 0.0
            and case.hydro_by_id(hid).production.eps_vv == 0.0
        ]
        blocks, obj = candidate(safe)
        if not acceptable(blocks, obj):
            return sol
    return conic.ConicSolution(
        block_values=tuple(blocks),
        scalar_values=sol.scalar_values,
        objective_value=obj,
        status=sol.status,
        residuals=sol.residuals,
        iterations=sol.iterations,
    )


@dataclass
class VerificationReport:
    power_balance_slack: np.ndarray      # (T,) total generation minus load
    water_residual: np.ndarray           # (T, H) Eq-11 residual in m^3/s
    bound_violations: list[str]
    objective_recomputed: float
    max_water_residual: float

    def ok(self, tol: float) -> bool:
        return (
            self.max_water_residual <= tol
            and float(self.power_balance_slack.min(initial=0.0)) >= -tol
            and not self.bound_violations
        )


def verify_schedule(case: CaseStudy, schedule: Schedule, tol: float = 1e-6) -> VerificationReport:
    """Re-check the schedule against the original (unlifted) constraints."""
    T = case.horizon.n_periods
    hydro_ids = schedule.hydro_ids
    violations: list[str] = []

    gen = np.zeros((T, len(hydro_ids)))
    for j, hid in enumerate(hydro_ids):
        plant = case.hydro_by_id(hid)
        for t in range(T):
            gen[t, j] = evaluate_production(
                plant.production, schedule.v[t, j], schedule.q[t, j]
            )

    slack = gen.sum(axis=1) + schedule.thermal_mw.sum(axis=1) - np.array(
        [case.horizon.load(t) for t in range(T)]
    )

    water = np.zeros((T, len(hydro_ids)))
    for j, hid in enumerate(hydro_ids):
        plant = case.hydro_by_id(hid)
        for t in range(T):
            theta_t = case.horizon.theta(t)
            v_prev = plant.v_initial if t == 0 else schedule.v[t - 1, j]
            lhs = (
                theta_t * (schedule.v[t, j] - v_prev)
                + schedule.q[t, j]
                + schedule.s[t, j]
            )
            for up in sorted(plant.upstream):
                k = hydro_ids.index(up)
                lhs -= schedule.q[t, k] + schedule.s[t, k]
            water[t, j] = lhs - case.horizon.inflow(t, hid)

    for j, hid in enumerate(hydro_ids):
        plant = case.hydro_by_id(hid)
        for t in range(T):
            if not plant.v_min - tol <= schedule.v[t, j] <= plant.v_max + tol:
                violations.append(f"v[{t},{hid}]={schedule.v[t, j]:.6g} outside bounds")
            if not plant.q_min - tol <= schedule.q[t, j] <= plant.q_max + tol:
                violations.append(f"q[{t},{hid}]={schedule.q[t, j]:.6g} outside bounds")
            if schedule.s[t, j] < -tol:
                violations.append(f"s[{t},{hid}]={schedule.s[t, j]:.6g} negative")
        if abs(schedule.v[T - 1, j] - plant.v_final) > tol * max(1.0, plant.v_final):
            violations.append(
                f"v[{T-1},{hid}]={schedule.v[T-1, j]:.6g} misses final target {plant.v_final}"
            )
    for k, tid in enumerate(schedule.thermal_ids):
        tp = case.thermal_by_id(tid)
        for t in range(T):
            if not tp.p_min - tol <= schedule.thermal_mw[t, k] <= tp.p_max + tol:
                violations.append(
                    f"p[{t},{tid}]={schedule.thermal_mw[t, k]:.6g} outside bounds"
                )

    objective = sum(
        case.thermal_by_id(tid).cost(schedule.thermal_mw[t, k])
        for k, tid in enumerate(schedule.thermal_ids)
        for t in range(T)
    )

    return VerificationReport(
        power_balance_slack=slack,
        water_residual=water,
        bound_violations=violations,
        objective_recomputed=float(objective),
        max_water_residual=float(np.abs(water).max(initial=0.0)),
    )


def schedule_generation_csv(schedule: Schedule) -> str:
    """One row per period: hydro MW per plant then thermal MW per plant."""
    buf = io.StringIO()
    header = ["period"] + list(schedule.hydro_ids) + list(schedule.thermal_ids)
    buf.write(",".join(header) + "\n")
    for t in range(schedule.n_periods):
        cells = [str(t + 1)]
        cells += [f"{x:.6g}" for x in schedule.hydro_mw[t]]
        cells += [f"{x:.6g}" for x in schedule.thermal_mw[t]]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def schedule_trajectory_csv(schedule: Schedule) -> str:
    """Per-period storage, discharge and spillage trajectories."""
    buf = io.StringIO()
    header = ["period"]
    for hid in schedule.hydro_ids:
        header += [f"v_{hid}", f"q_{hid}", f"s_{hid}"]
    buf.write(",".join(header) + "\n")
    for t in range(schedule.n_periods):
        cells = [str(t + 1)]
        for j in range(len(schedule.hydro_ids)):
            cells += [
                repr(float(schedule.v[t, j])),
                repr(float(schedule.q[t, j])),
                repr(float(schedule.s[t, j])),
            ]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()
