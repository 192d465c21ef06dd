"""Valid linear cuts for the lifted hydro blocks.

The bilinear lifted entries (storage x discharge, storage squared) are only
weakly constrained by positive semidefiniteness; the convex-envelope cuts
here bound them with products of the box bounds on storage and discharge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic
from .model import CaseStudy, HydroPlant
from .shor import LiftedLayout, lift_hydro

__all__ = [
    "Cut",
    "CutSet",
    "rlt_cuts_for_plant",
    "build_cutset",
    "apply_cuts",
    "generic_mccormick",
    "validate_cut",
]


@dataclass(frozen=True)
class Cut:
    """One valid inequality over a single lifted hydro block."""

    period: int
    plant_id: str
    origin: str
    matrix: np.ndarray
    rhs: float
    sense: str = "ge"

    def violation(self, X: np.ndarray) -> float:
        value = float(np.tensordot(self.matrix, X))
        return self.rhs - value if self.sense == "ge" else value - self.rhs


@dataclass(frozen=True)
class CutSet:
    cuts: tuple[Cut, ...]

    def __len__(self) -> int:
        return len(self.cuts)

    def for_plant(self, plant_id: str) -> tuple[Cut, ...]:
        return tuple(c for c in self.cuts if c.plant_id == plant_id)


def rlt_cuts_for_plant(plant: HydroPlant, period: int) -> list[Cut]:
    """Envelope cuts on the lifted entries of one (period, plant) block.

    The two storage-discharge cuts only matter when the production function
    couples the variables (bilinear coefficient nonzero); the storage-squared
    upper envelope is always added because the squared-storage entry appears
    in the production expression of every plant through the quadratic term,
    and it is harmless otherwise.
    """
    v_lo, v_hi = plant.v_min, plant.v_max
    q_lo, q_hi = plant.q_min, plant.q_max
    cuts: list[Cut] = []
    if plant.production.eps_qv > 0.0:
        # vq >= q_hi v + v_lo q - v_lo q_hi  <=>  -vq + q_hi v + v_lo q >= v_lo q_hi
        mat_a = np.array(
            [
                [0.0, -0.5, 0.5 * q_hi],
                [-0.5, 0.0, 0.5 * v_lo],
                [0.5 * q_hi, 0.5 * v_lo, 0.0],
            ]
        )
        cuts.append(Cut(period, plant.id, "vq_upper_A", mat_a, v_lo * q_hi))
        # vq >= q_lo v + v_hi q - v_hi q_lo
        mat_b = np.array(
            [
                [0.0, -0.5, 0.5 * q_lo],
                [-0.5, 0.0, 0.5 * v_hi],
                [0.5 * q_lo, 0.5 * v_hi, 0.0],
            ]
        )
        cuts.append(Cut(period, plant.id, "vq_upper_B", mat_b, v_hi * q_lo))
    # v^2 <= (v_lo + v_hi) v - v_lo v_hi  (secant over the storage box)
    mat_c = np.array(
        [
            [-1.0, 0.0, 0.5 * (v_lo + v_hi)],
            [0.0, 0.0, 0.0],
            [0.5 * (v_lo + v_hi), 0.0, 0.0],
        ]
    )
    cuts.append(Cut(period, plant.id, "v2_upper", mat_c, v_lo * v_hi))
    return cuts


def build_cutset(case: CaseStudy) -> CutSet:
    cuts: list[Cut] = []
    for t in range(case.horizon.n_periods):
        for plant in case.hydro:
            cuts.extend(rlt_cuts_for_plant(plant, t))
    return CutSet(cuts=tuple(cuts))


def apply_cuts(
    problem: conic.ConicProblem, layout: LiftedLayout, cutset: CutSet
) -> None:
    for cut in cutset.cuts:
        blk = layout.hydro_blocks[(cut.period, cut.plant_id)]
        problem.add_row(cut.sense, cut.rhs, [(blk, cut.matrix)])


def generic_mccormick(
    x_bounds: tuple[float, float], y_bounds: tuple[float, float]
) -> list[tuple[np.ndarray, float, float, str]]:
    """All four McCormick envelope facets for w = x*y over a box.

    Each entry is (coefficients (a_x, a_y, a_w), constant, rhs, sense) with
    the inequality read as a_x x + a_y y + a_w w >= rhs (or <=).  The first
    two are under-estimators of w, the last two over-estimators.
    """
    x_lo, x_hi = x_bounds
    y_lo, y_hi = y_bounds
    return [
        # w >= x_lo y + y_lo x - x_lo y_lo
        (np.array([-y_lo, -x_lo, 1.0]), 0.0, -x_lo * y_lo, "ge"),
        # w >= x_hi y + y_hi x - x_hi y_hi
        (np.array([-y_hi, -x_hi, 1.0]), 0.0, -x_hi * y_hi, "ge"),
        # w <= x_hi y + y_lo x - x_hi y_lo
        (np.array([-y_lo, -x_hi, 1.0]), 0.0, -x_hi * y_lo, "le"),
        # w <= x_lo y + y_hi x - x_lo y_hi
        (np.array([-y_hi, -x_lo, 1.0]), 0.0, -x_lo * y_hi, "le"),
    ]


def validate_cut(
    cut: Cut, plant: HydroPlant, n_samples: int = 10_000, seed: int = 0
) -> float:
    """Max violation of the cut over rank-1 lifts of box-feasible (v, q).

    A valid cut returns a value <= 0 up to round-off.
    """
    rng = np.random.default_rng(seed)
    v = rng.uniform(plant.v_min, plant.v_max, n_samples)
    q = rng.uniform(plant.q_min, plant.q_max, n_samples)
    worst = -np.inf
    # include the box corners, where envelope cuts are tight
    corners_v = [plant.v_min, plant.v_max]
    corners_q = [plant.q_min, plant.q_max]
    vs = np.concatenate([v, np.repeat(corners_v, 2)])
    qs = np.concatenate([q, corners_q * 2])
    for vi, qi in zip(vs, qs):
        worst = max(worst, cut.violation(lift_hydro(vi, qi)))
    return worst
