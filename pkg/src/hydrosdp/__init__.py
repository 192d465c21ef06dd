"""Hydro-thermal coordination via semidefinite relaxation, McCormick/RLT
convex envelopes, and a convex-concave procedure for stationary-point
recovery, with an embedded interior-point SDP solver."""

from .model import (
    CaseStudy,
    CaseValidationError,
    HydroPlant,
    ProductionQuadratic,
    ThermalPlant,
    bundled_case_path,
    load_bundled_case,
    load_case,
)
from .conic import ConicProblem, SolveOptions, Status, export_sdpa, solve
from .shor import (
    LiftedLayout,
    Schedule,
    build_relaxation,
    extract_schedule,
    rank1_gap,
    verify_schedule,
)
from .cuts import CutSet, apply_cuts, build_cutset
from .ccp import CCPTrace, ccp_solve
from .analysis import brute_force_oracle, maxgen_check, stationarity_check

__version__ = "0.1.0"

__all__ = [
    "CaseStudy",
    "CaseValidationError",
    "HydroPlant",
    "ProductionQuadratic",
    "ThermalPlant",
    "bundled_case_path",
    "load_bundled_case",
    "load_case",
    "ConicProblem",
    "SolveOptions",
    "Status",
    "export_sdpa",
    "solve",
    "LiftedLayout",
    "Schedule",
    "build_relaxation",
    "extract_schedule",
    "rank1_gap",
    "verify_schedule",
    "CutSet",
    "apply_cuts",
    "build_cutset",
    "CCPTrace",
    "ccp_solve",
    "brute_force_oracle",
    "maxgen_check",
    "stationarity_check",
    "__version__",
]
