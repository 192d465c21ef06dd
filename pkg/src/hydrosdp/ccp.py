"""Convex-concave procedure for recovering a stationary HTC schedule.

The hydro production quadratic is indefinite in general.  Writing its
negated quadratic part as a difference of PSD matrices and linearizing the
convex contribution at the previous iterate gives a concave minorant of
production, so each subproblem's power balance is a valid restriction and
any subproblem-feasible point remains feasible for the original problem.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import conic, cuts as cuts_mod, shor
from .model import CaseStudy, ProductionQuadratic

__all__ = [
    "DCSplit",
    "CCPTrace",
    "CCPError",
    "dc_split",
    "linearize",
    "convergence_metric",
    "ccp_solve",
    "trace_csv",
    "plot_trace",
]


class CCPError(RuntimeError):
    """A CCP subproblem failed to solve."""


@dataclass(frozen=True)
class DCSplit:
    """Spectral split of the negated production quadratic -H = plus - minus
    with both parts PSD."""

    plus: np.ndarray
    minus: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return -(self.plus - self.minus)


def dc_split(p: ProductionQuadratic) -> DCSplit:
    neg_h = -p.quadratic_matrix()
    w, u = np.linalg.eigh(neg_h)
    plus = (u * np.maximum(w, 0.0)) @ u.T
    minus = (u * np.maximum(-w, 0.0)) @ u.T
    return DCSplit(plus=(plus + plus.T) / 2.0, minus=(minus + minus.T) / 2.0)


def linearize(
    split: DCSplit, e: np.ndarray, x_prev: np.ndarray, eps_0: float = 0.0
) -> np.ndarray:
    """Concave minorant of production, tangent at ``x_prev`` = (v', q'),
    as a 3x3 matrix over the lifted [v, q, 1] block.

    With -H = H+ - H-, production is x^T H x + e^T x = -x^T H+ x
    + x^T H- x + e^T x; the convex term x^T H- x is bounded below by its
    tangent 2 x_prev^T H- x - x_prev^T H- x_prev, which fixes the border to
    e/2 + H- x_prev and the corner to -x_prev^T H- x_prev (the signs that
    make the minorant tangent at x_prev and majorized by the true output).
    """
    e = np.asarray(e, dtype=float)
    x_prev = np.asarray(x_prev, dtype=float)
    border = 0.5 * e + split.minus @ x_prev
    corner = eps_0 - float(x_prev @ split.minus @ x_prev)
    out = np.zeros((3, 3))
    out[:2, :2] = -split.plus
    out[:2, 2] = border
    out[2, :2] = border
    out[2, 2] = corner
    return out


def convergence_metric(
    problem_cost: list[np.ndarray],
    blocks_new: list[np.ndarray],
    blocks_old: list[np.ndarray],
) -> float:
    """Sum of absolute per-block cost changes between consecutive iterates."""
    return float(
        sum(
            abs(np.tensordot(C, new - old))
            for C, new, old in zip(problem_cost, blocks_new, blocks_old)
        )
    )


@dataclass
class CCPTrace:
    """Objective per iteration (index 0 is the cut-tightened relaxation
    bound) and the convergence metric per CCP step."""

    objectives: list[float]
    metrics: list[float]
    converged: bool
    eps: float

    @property
    def iterations(self) -> int:
        return len(self.objectives) - 1


def _thermal_cost_mats(case: CaseStudy, layout: shor.LiftedLayout) -> list:
    mats = [None] * (max(layout.thermal_blocks.values(), default=-1) + 1)
    for (t, tid), blk in layout.thermal_blocks.items():
        mats[blk] = shor.cost_matrix(case.thermal_by_id(tid))
    return mats


def _borders(schedule: shor.Schedule) -> dict:
    return {
        (t, hid): np.array(
            [schedule.v[t, schedule.hydro_index(hid)],
             schedule.q[t, schedule.hydro_index(hid)]]
        )
        for t in range(schedule.n_periods)
        for hid in schedule.hydro_ids
    }


def ccp_solve(
    case: CaseStudy,
    *,
    eps: float = 1e-2,
    max_iter: int = 50,
    cuts_in_subproblems: bool = False,
    options: conic.SolveOptions | None = None,
) -> tuple[shor.Schedule, CCPTrace]:
    """Run the convex-concave procedure seeded by the cut-tightened
    relaxation; returns the final schedule and the iteration trace."""
    options = options or conic.SolveOptions()
    cutset = cuts_mod.build_cutset(case)

    problem, layout = shor.build_relaxation(case)
    cuts_mod.apply_cuts(problem, layout, cutset)
    sol = conic.solve(problem, options)
    if sol.status != conic.Status.OPTIMAL:
        raise CCPError(f"cut-tightened relaxation returned {sol.status}")
    schedule = shor.extract_schedule(sol, layout, case)
    objectives = [sol.objective_value]
    metrics: list[float] = []
    converged = False

    prev_thermal = [sol.block_values[blk] for blk in sorted(layout.thermal_blocks.values())]

    for _ in range(max_iter):
        x_prev = _borders(schedule)
        h_tilde = {}
        for key in x_prev:
            p = case.hydro_by_id(key[1]).production
            h_tilde[key] = linearize(
                dc_split(p), p.linear_vector(), x_prev[key], p.eps_0
            )
        sub, sub_layout = shor.build_relaxation(case, h_tilde=h_tilde)
        if cuts_in_subproblems:
            cuts_mod.apply_cuts(sub, sub_layout, cutset)
        sol = conic.solve(sub, options)
        if sol.status != conic.Status.OPTIMAL:
            raise CCPError(f"CCP subproblem returned {sol.status}")
        sol = shor.polish_rank1(sub, sol, sub_layout, case)
        schedule = shor.extract_schedule(sol, sub_layout, case)
        objectives.append(sol.objective_value)

        cost_mats = _thermal_cost_mats(case, sub_layout)
        thermal_blocks = [
            sol.block_values[blk] for blk in sorted(sub_layout.thermal_blocks.values())
        ]
        metric = convergence_metric(
            [m for m in cost_mats if m is not None], thermal_blocks, prev_thermal
        )
        metrics.append(metric)
        prev_thermal = thermal_blocks
        if metric <= eps:
            converged = True
            break

    return schedule, CCPTrace(
        objectives=objectives, metrics=metrics, converged=converged, eps=eps
    )


def trace_csv(trace: CCPTrace) -> str:
    buf = io.StringIO()
    buf.write("iteration,objective,metric\n")
    for k, obj in enumerate(trace.objectives):
        metric = "" if k == 0 else repr(trace.metrics[k - 1])
        buf.write(f"{k},{obj!r},{metric}\n")
    return buf.getvalue()


def plot_trace(trace: CCPTrace, path: str) -> None:
    """Objective-versus-iteration plot (requires matplotlib)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots()
    ax.plot(range(len(trace.objectives)), trace.objectives, marker="o")
    ax.set_xlabel("CCP iteration")
    ax.set_ylabel("objective")
    ax.grid(True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
