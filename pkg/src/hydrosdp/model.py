"""Domain model for hydro-thermal coordination instances.

Holds the physical plant descriptions, the quadratic hydro production
function and its derivation from first principles, definiteness
diagnostics, and JSON case-file ingestion with validation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "CaseValidationError",
    "InvalidPlantError",
    "PhysicalHydroParams",
    "EfficiencyCurve",
    "ProductionQuadratic",
    "HydroPlant",
    "ThermalPlant",
    "Period",
    "Horizon",
    "CaseStudy",
    "Definiteness",
    "derive_production",
    "evaluate_production",
    "eigenvalues",
    "classify_definiteness",
    "evaluate_efficiency",
    "theta",
    "load_case",
    "bundled_case_path",
    "load_bundled_case",
]

SECONDS_PER_DAY = 86400.0
HM3_TO_M3 = 1.0e6
W_TO_MW = 1.0e-6


class CaseValidationError(ValueError):
    """A case file or case object violates a structural invariant.

    ``field`` names the offending quantity, e.g. ``"hydro[GH3].v_min"``.
    """

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class InvalidPlantError(ValueError):
    """Physical parameters yield a non-generating (head-deficit) plant."""


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise CaseValidationError(field_name, message)


@dataclass(frozen=True)
class PhysicalHydroParams:
    """Physical description of a hydro plant with linear head geometry."""

    g: float = 9.81
    rho: float = 1000.0
    eta_G: float = 1.0
    eta_T: float = 1.0
    h_b0: float = 0.0
    h_b1: float = 0.0
    h_t0: float = 0.0
    h_t1: float = 0.0
    h_l: float = 0.0
    h_a: float = 0.0

    def __post_init__(self):
        _require(self.g > 0, "g", "must be positive")
        _require(self.rho > 0, "rho", "must be positive")
        _require(0 < self.eta_G <= 1, "eta_G", "must be in (0, 1]")
        _require(0 <= self.eta_T <= 1, "eta_T", "must be in [0, 1]")
        _require(self.h_b1 >= 0, "h_b1", "forebay slope must be nonnegative")
        _require(self.h_t1 >= 0, "h_t1", "tailwater slope must be nonnegative")
        _require(self.h_l >= 0, "h_l", "load loss must be nonnegative")
        _require(self.h_a >= 0, "h_a", "atmospheric loss must be nonnegative")

    @property
    def kappa(self) -> float:
        """g * rho * eta_G, the constant power conversion factor (W per m^4/s)."""
        return self.g * self.rho * self.eta_G


@dataclass(frozen=True)
class EfficiencyCurve:
    """Quadratic turbine-efficiency surface over (net head, discharge)."""

    e0: float
    e_h: float
    e_q: float
    e_hq: float
    e_hh: float
    e_qq: float

    def __post_init__(self):
        for name in ("e0", "e_h", "e_q", "e_hq", "e_hh", "e_qq"):
            _require(math.isfinite(getattr(self, name)), name, "must be finite")

    def is_concave(self, tol: float = 0.0) -> bool:
        """True when the quadratic surface is concave (Hessian NSD)."""
        hess = np.array([[2 * self.e_hh, self.e_hq], [self.e_hq, 2 * self.e_qq]])
        return bool(np.linalg.eigvalsh(hess).max() <= tol)


@dataclass(frozen=True)
class ProductionQuadratic:
    """Coefficients of hydro power (MW) over storage v (hm^3), discharge q (m^3/s).

    P(v, q) = eps_0 + eps_v*v + eps_q*q + eps_vv*v^2 + eps_qq*q^2 + eps_qv*v*q
    """

    eps_q: float
    eps_qq: float
    eps_qv: float
    eps_0: float = 0.0
    eps_v: float = 0.0
    eps_vv: float = 0.0

    def __post_init__(self):
        for name in ("eps_q", "eps_qq", "eps_qv", "eps_0", "eps_v", "eps_vv"):
            _require(math.isfinite(getattr(self, name)), name, "must be finite")

    def quadratic_matrix(self) -> np.ndarray:
        """Symmetric 2x2 matrix of the pure quadratic part over (v, q)."""
        return np.array(
            [
                [self.eps_vv, self.eps_qv / 2.0],
                [self.eps_qv / 2.0, self.eps_qq],
            ]
        )

    def linear_vector(self) -> np.ndarray:
        """Linear coefficients over (v, q)."""
        return np.array([self.eps_v, self.eps_q])


@dataclass(frozen=True)
class HydroPlant:
    id: str
    v_min: float
    v_max: float
    q_min: float
    q_max: float
    v_initial: float
    v_final: float
    production: ProductionQuadratic
    upstream: frozenset[str] = frozenset()

    def __post_init__(self):
        p = f"hydro[{self.id}]"
        _require(self.v_min <= self.v_max, f"{p}.v_min", "v_min must not exceed v_max")
        _require(self.q_min <= self.q_max, f"{p}.q_min", "q_min must not exceed q_max")
        _require(
            self.v_min <= self.v_initial <= self.v_max,
            f"{p}.v_initial",
            "initial storage outside bounds",
        )
        _require(
            self.v_min <= self.v_final <= self.v_max,
            f"{p}.v_final",
            "final storage outside bounds",
        )

    @property
    def run_of_river(self) -> bool:
        return self.v_min == self.v_max


@dataclass(frozen=True)
class ThermalPlant:
    id: str
    p_min: float
    p_max: float
    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        p = f"thermal[{self.id}]"
        _require(self.p_min <= self.p_max, f"{p}.p_min", "p_min must not exceed p_max")
        _require(self.c2 >= 0, f"{p}.c2", "quadratic cost must be convex (c2 >= 0)")

    def cost(self, power: float) -> float:
        return self.c0 + self.c1 * power + self.c2 * power * power


@dataclass(frozen=True)
class Period:
    days: float
    load: float

    def __post_init__(self):
        _require(self.days >= 1, "period.days", "must be at least one day")
        _require(self.load >= 0, "period.load", "must be nonnegative")


@dataclass(frozen=True)
class Horizon:
    periods: tuple[Period, ...]
    inflows: dict[str, tuple[float, ...]]

    def __post_init__(self):
        n = len(self.periods)
        _require(n >= 1, "horizon.periods", "at least one period required")
        for pid, series in self.inflows.items():
            _require(
                len(series) == n,
                f"horizon.inflows[{pid}]",
                f"expected {n} entries, got {len(series)}",
            )
            for t, e in enumerate(series):
                _require(e >= 0, f"horizon.inflows[{pid}][{t}]", "inflow must be nonnegative")

    @property
    def n_periods(self) -> int:
        return len(self.periods)

    def theta(self, t: int) -> float:
        return theta(self.periods[t].days)

    def load(self, t: int) -> float:
        return self.periods[t].load

    def inflow(self, t: int, plant_id: str) -> float:
        return self.inflows[plant_id][t]


@dataclass(frozen=True)
class CaseStudy:
    hydro: tuple[HydroPlant, ...]
    thermal: tuple[ThermalPlant, ...]
    horizon: Horizon
    name: str = "case"

    def __post_init__(self):
        ids = [h.id for h in self.hydro]
        _require(len(set(ids)) == len(ids), "hydro", "duplicate plant ids")
        tids = [t.id for t in self.thermal]
        _require(len(set(tids)) == len(tids), "thermal", "duplicate plant ids")
        known = set(ids)
        for h in self.hydro:
            for up in h.upstream:
                _require(
                    up in known,
                    f"hydro[{h.id}].upstream",
                    f"references unknown plant {up!r}",
                )
        for h in self.hydro:
            _require(
                h.id in self.horizon.inflows,
                f"horizon.inflows[{h.id}]",
                "missing inflow series",
            )
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        upstream = {h.id: set(h.upstream) for h in self.hydro}
        state: dict[str, int] = {}

        def visit(node: str, stack: list[str]) -> None:
            state[node] = 1
            stack.append(node)
            for nxt in sorted(upstream[node]):
                if state.get(nxt) == 1:
                    cycle = stack[stack.index(nxt):] + [nxt]
                    raise CaseValidationError(
                        "hydro.topology", f"cascade contains a cycle: {' -> '.join(cycle)}"
                    )
                if state.get(nxt, 0) == 0:
                    visit(nxt, stack)
            stack.pop()
            state[node] = 2

        for h in sorted(upstream):
            if state.get(h, 0) == 0:
                visit(h, [])

    def hydro_by_id(self, plant_id: str) -> HydroPlant:
        for h in self.hydro:
            if h.id == plant_id:
                return h
        raise KeyError(plant_id)

    def thermal_by_id(self, plant_id: str) -> ThermalPlant:
        for t in self.thermal:
            if t.id == plant_id:
                return t
        raise KeyError(plant_id)

    def downstream_closure(self, plant_id: str) -> tuple[str, ...]:
        """plant_id followed by every plant reachable through downstream links."""
        downstream: dict[str, list[str]] = {h.id: [] for h in self.hydro}
        for h in self.hydro:
            for up in h.upstream:
                downstream[up].append(h.id)
        out: list[str] = []
        queue = [plant_id]
        while queue:
            cur = queue.pop(0)
            if cur in out:
                continue
            out.append(cur)
            queue.extend(sorted(downstream[cur]))
        return tuple(out)


class Definiteness:
    CONCAVE = "Concave"
    INDEFINITE = "Indefinite"
    CONVEX = "Convex"


def theta(days: float) -> float:
    """Volume-to-flow conversion: hm^3 per period -> mean m^3/s over the period."""
    if days < 1:
        raise ValueError("days must be at least 1")
    return HM3_TO_M3 / (SECONDS_PER_DAY * days)


def derive_production(phys: PhysicalHydroParams) -> ProductionQuadratic:
    """Expand P = kappa*eta_T*q*(net head) into quadratic coefficients in MW.

    Net head is h_b0 + h_b1*v - h_t0 - h_t1*q - h_l - h_a, so the expansion
    has no v^2 or constant term.
    """
    scale = phys.kappa * phys.eta_T * W_TO_MW
    head0 = phys.h_b0 - phys.h_t0 - phys.h_l - phys.h_a
    eps_q = scale * head0
    if eps_q <= 0:
        raise InvalidPlantError(
            f"static head {head0} m and efficiency {phys.eta_T} produce "
            f"nonpositive linear coefficient {eps_q}; plant cannot generate"
        )
    return ProductionQuadratic(
        eps_q=eps_q,
        eps_qq=-scale * phys.h_t1,
        eps_qv=scale * phys.h_b1,
    )


def evaluate_production(p: ProductionQuadratic, v: float, q: float) -> float:
    """Hydro power output in MW at storage v (hm^3), discharge q (m^3/s)."""
    return (
        p.eps_0
        + p.eps_v * v
        + p.eps_q * q
        + p.eps_vv * v * v
        + p.eps_qq * q * q
        + p.eps_qv * v * q
    )


def eigenvalues(p: ProductionQuadratic) -> tuple[float, float]:
    """Eigenvalues of the quadratic-part matrix, largest first."""
    if p.eps_vv == 0.0:
        root = math.sqrt(4.0 * p.eps_qv**2 + p.eps_qq**2)
        lam1 = (p.eps_qq + root) / 2.0
        lam2 = (p.eps_qq - root) / 2.0
    else:
        lam2, lam1 = np.linalg.eigvalsh(p.quadratic_matrix())
    return (lam1, lam2)


def classify_definiteness(p: ProductionQuadratic) -> str:
    """Concave / Convex / Indefinite with a tolerance band around zero."""
    lam1, lam2 = eigenvalues(p)
    tol = 1e-12 * max(1.0, abs(p.eps_qq), abs(p.eps_qv), abs(p.eps_vv))
    if lam1 <= tol and lam2 <= tol:
        return Definiteness.CONCAVE
    if lam1 >= -tol and lam2 >= -tol:
        return Definiteness.CONVEX
    return Definiteness.INDEFINITE


def evaluate_efficiency(c: EfficiencyCurve, h_n: float, q: float) -> float:
    """Turbine efficiency surface value; may exceed [0, 1], caller clamps."""
    return (
        c.e0
        + c.e_h * h_n
        + c.e_q * q
        + c.e_hq * h_n * q
        + c.e_hh * h_n * h_n
        + c.e_qq * q * q
    )


def _parse_production(obj: dict, where: str) -> ProductionQuadratic:
    try:
        prod = ProductionQuadratic(
            eps_q=float(obj["eps_q"]),
            eps_qq=float(obj["eps_qq"]),
            eps_qv=float(obj["eps_qv"]),
            eps_0=float(obj.get("eps_0", 0.0)),
            eps_v=float(obj.get("eps_v", 0.0)),
            eps_vv=float(obj.get("eps_vv", 0.0)),
        )
    except KeyError as exc:
        raise CaseValidationError(f"{where}.production", f"missing key {exc}") from exc
    _require(prod.eps_q > 0, f"{where}.production.eps_q", "must be positive")
    _require(prod.eps_qq <= 0, f"{where}.production.eps_qq", "must be nonpositive")
    _require(prod.eps_qv >= 0, f"{where}.production.eps_qv", "must be nonnegative")
    return prod


def load_case(path: str | Path) -> CaseStudy:
    """Parse and validate a JSON case file.

    Top-level keys: "hydro", "thermal", "horizon"; see the bundled
    paranaiba.json for the full layout.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CaseValidationError("file", f"not valid JSON: {exc}") from exc

    for key in ("hydro", "thermal", "horizon"):
        _require(key in raw, key, "missing top-level key")

    hydro = []
    for obj in raw["hydro"]:
        _require("id" in obj, "hydro[].id", "missing plant id")
        pid = str(obj["id"])
        where = f"hydro[{pid}]"
        try:
            hydro.append(
                HydroPlant(
                    id=pid,
                    v_min=float(obj["v_min"]),
                    v_max=float(obj["v_max"]),
                    q_min=float(obj["q_min"]),
                    q_max=float(obj["q_max"]),
                    v_initial=float(obj["v_initial"]),
                    v_final=float(obj["v_final"]),
                    production=_parse_production(obj["production"], where),
                    upstream=frozenset(str(u) for u in obj.get("upstream", [])),
                )
            )
        except KeyError as exc:
            raise CaseValidationError(where, f"missing key {exc}") from exc

    thermal = []
    for obj in raw["thermal"]:
        _require("id" in obj, "thermal[].id", "missing plant id")
        tid = str(obj["id"])
        try:
            thermal.append(
                ThermalPlant(
                    id=tid,
                    p_min=float(obj["p_min"]),
                    p_max=float(obj["p_max"]),
                    c0=float(obj.get("c0", 0.0)),
                    c1=float(obj.get("c1", 0.0)),
                    c2=float(obj.get("c2", 0.0)),
                )
            )
        except KeyError as exc:
            raise CaseValidationError(f"thermal[{tid}]", f"missing key {exc}") from exc

    hz = raw["horizon"]
    _require("periods" in hz, "horizon.periods", "missing")
    _require("inflows" in hz, "horizon.inflows", "missing")
    periods = tuple(
        Period(days=float(p["days"]), load=float(p["load"])) for p in hz["periods"]
    )
    inflows = {
        str(pid): tuple(float(x) for x in series)
        for pid, series in hz["inflows"].items()
    }
    horizon = Horizon(periods=periods, inflows=inflows)

    return CaseStudy(
        hydro=tuple(hydro),
        thermal=tuple(thermal),
        horizon=horizon,
        name=path.stem,
    )


def bundled_case_path(name: str) -> Path:
    """Filesystem path of a bundled case file, e.g. "paranaiba" or "mini"."""
    ref = resources.files("hydrosdp.data").joinpath(f"{name}.json")
    with resources.as_file(ref) as p:
        return Path(p)


def load_bundled_case(name: str) -> CaseStudy:
    return load_case(bundled_case_path(name))
