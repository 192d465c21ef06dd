"""Block-structured conic problems and the solver interface.

A ConicProblem is a minimization over a product of small PSD matrix blocks
and a nonnegative orthant, with linear (Frobenius-product) rows of sense
eq/ge/le.  Solving is delegated to a backend; the default backend is the
embedded interior-point method in :mod:`hydrosdp.ipm`.
"""

from __future__ import annotations

import os
import re
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "SolveOptions",
    "Status",
    "Row",
    "ConicProblem",
    "ConicSolution",
    "Residuals",
    "solve",
    "psd_check",
    "entry_indicator",
    "fixed_entry_row",
    "row_value",
    "row_violations",
    "export_sdpa",
    "parse_sdpa",
    "EmbeddedBackend",
    "ExternalSdpaBackend",
    "get_backend",
]

SENSES = ("eq", "ge", "le")


class Status:
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAX_ITER = "MaxIter"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class SolveOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    eig_tol: float = 1e-7
    max_iter: int = 200


@dataclass(frozen=True)
class Row:
    sense: str
    rhs: float
    block_terms: tuple[tuple[int, np.ndarray], ...] = ()
    scalar_terms: tuple[tuple[int, float], ...] = ()


@dataclass(frozen=True)
class Residuals:
    primal: float
    dual: float
    gap: float


def _as_sym(mat: np.ndarray, dim: int) -> np.ndarray:
    m = np.asarray(mat, dtype=float)
    if m.shape != (dim, dim):
        raise ValueError(f"coefficient matrix shape {m.shape} != block dim {dim}")
    if not np.isfinite(m).all():
        raise ValueError("coefficient matrix must be finite")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(m).max()))):
        raise ValueError("coefficient matrix must be symmetric")
    return (m + m.T) / 2.0


class ConicProblem:
    """Mutable builder for a block SDP; treated as immutable once solved."""

    def __init__(self):
        self.block_dims: list[int] = []
        self.block_scales: list[np.ndarray | None] = []
        self.n_scalars: int = 0
        self.scalar_scales: list[float] = []
        self.obj_blocks: dict[int, np.ndarray] = {}
        self.obj_scalars: dict[int, float] = {}
        self.rows: list[Row] = []

    # -- construction -----------------------------------------------------
    def add_block(self, dim: int, scale=None) -> int:
        """Register a PSD block.  ``scale`` is an optional per-coordinate
        magnitude hint (positive vector of length ``dim``) used by the
        embedded solver to precondition via congruence scaling."""
        if dim < 1:
            raise ValueError("block dimension must be >= 1")
        if scale is not None:
            scale = np.asarray(scale, dtype=float)
            if scale.shape != (dim,) or np.any(scale <= 0):
                raise ValueError("scale must be a positive vector of length dim")
        self.block_dims.append(int(dim))
        self.block_scales.append(scale)
        return len(self.block_dims) - 1

    def add_scalar(self, cost: float = 0.0, scale: float = 1.0) -> int:
        if scale <= 0:
            raise ValueError("scale must be positive")
        idx = self.n_scalars
        self.n_scalars += 1
        self.scalar_scales.append(float(scale))
        if cost != 0.0:
            self.obj_scalars[idx] = float(cost)
        return idx

    def set_block_objective(self, block: int, mat: np.ndarray) -> None:
        self.obj_blocks[block] = _as_sym(mat, self.block_dims[block])

    def set_scalar_objective(self, idx: int, cost: float) -> None:
        if not 0 <= idx < self.n_scalars:
            raise IndexError(idx)
        self.obj_scalars[idx] = float(cost)

    def add_row(
        self,
        sense: str,
        rhs: float,
        block_terms=(),
        scalar_terms=(),
    ) -> int:
        if sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES}")
        if not np.isfinite(rhs):
            raise ValueError("rhs must be finite")
        bt = []
        for b, m in block_terms:
            if not 0 <= b < len(self.block_dims):
                raise IndexError(f"block {b} out of range")
            bt.append((b, _as_sym(m, self.block_dims[b])))
        st = []
        for i, c in scalar_terms:
            if not 0 <= i < self.n_scalars:
                raise IndexError(f"scalar {i} out of range")
            if not np.isfinite(c):
                raise ValueError("scalar coefficient must be finite")
            st.append((int(i), float(c)))
        self.rows.append(Row(sense, float(rhs), tuple(bt), tuple(st)))
        return len(self.rows) - 1

    def fix_entry(self, block: int, i: int, j: int, value: float) -> int:
        """Add the equality row X_ij = value (symmetric indicator coefficients)."""
        dim = self.block_dims[block]
        return self.add_row("eq", value, [(block, entry_indicator(dim, i, j))])

    # -- inspection --------------------------------------------------------
    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def objective_value(self, block_values, scalar_values) -> float:
        total = 0.0
        for b, m in self.obj_blocks.items():
            total += float(np.tensordot(m, block_values[b]))
        for i, c in self.obj_scalars.items():
            total += c * float(scalar_values[i])
        return total


@dataclass(frozen=True)
class ConicSolution:
    block_values: tuple[np.ndarray, ...]
    scalar_values: np.ndarray
    objective_value: float
    status: str
    residuals: Residuals
    iterations: int


def entry_indicator(dim: int, i: int, j: int) -> np.ndarray:
    """Symmetric matrix E with E • X == X_ij (1 on diagonal, 1/2 on a pair)."""
    if not (0 <= i < dim and 0 <= j < dim):
        raise IndexError(f"entry ({i}, {j}) out of range for dim {dim}")
    e = np.zeros((dim, dim))
    if i == j:
        e[i, j] = 1.0
    else:
        e[i, j] = e[j, i] = 0.5
    return e


def fixed_entry_row(block: int, dim: int, i: int, j: int, value: float) -> Row:
    """Standalone constraint row asserting X_ij = value on the given block."""
    return Row("eq", float(value), ((block, entry_indicator(dim, i, j)),), ())


def psd_check(mat: np.ndarray, tol: float = 1e-7) -> tuple[bool, float]:
    """(lambda_min >= -tol, lambda_min) for a symmetric matrix."""
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    lam_min = float(np.linalg.eigvalsh((m + m.T) / 2.0)[0])
    return lam_min >= -tol, lam_min


def row_value(row: Row, block_values, scalar_values) -> float:
    val = 0.0
    for b, m in row.block_terms:
        val += float(np.tensordot(m, block_values[b]))
    for i, c in row.scalar_terms:
        val += c * float(scalar_values[i])
    return val


def row_violations(problem: ConicProblem, block_values, scalar_values) -> np.ndarray:
    """Nonnegative violation per row (0 when satisfied)."""
    out = np.zeros(problem.n_rows)
    for k, row in enumerate(problem.rows):
        val = row_value(row, block_values, scalar_values)
        if row.sense == "eq":
            out[k] = abs(val - row.rhs)
        elif row.sense == "ge":
            out[k] = max(0.0, row.rhs - val)
        else:
            out[k] = max(0.0, val - row.rhs)
    return out


# -- backends ---------------------------------------------------------------


class EmbeddedBackend:
    """Default backend: the interior-point solver in hydrosdp.ipm."""

    def solve(self, problem: ConicProblem, options: SolveOptions) -> ConicSolution:
        from . import ipm

        return ipm.solve_conic(problem, options)


class ExternalSdpaBackend:
    """Runs an external command on a sparse-SDPA export of the problem.

    The command is a format string with {input} and {output} placeholders.
    The output file is expected to contain objValPrimal and per-block xMat
    values in the conventional solver output layout.
    """

    def __init__(self, command: str):
        self.command = command

    def solve(self, problem: ConicProblem, options: SolveOptions) -> ConicSolution:
        with tempfile.TemporaryDirectory(prefix="hydrosdp-") as tmp:
            inp = Path(tmp) / "problem.dat-s"
            out = Path(tmp) / "problem.out"
            export_sdpa(problem, inp)
            cmd = self.command.format(input=inp, output=out)
            proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
            if proc.returncode != 0 or not out.exists():
                raise RuntimeError(
                    f"external solver failed (rc={proc.returncode}): {proc.stderr.strip()}"
                )
            return _parse_external_result(problem, out.read_text(), options)


def get_backend():
    """Backend selected by HTC_SOLVER_BACKEND ("embedded" or "external:<cmd>")."""
    spec = os.environ.get("HTC_SOLVER_BACKEND", "embedded")
    if spec == "embedded":
        return EmbeddedBackend()
    if spec.startswith("external:"):
        return ExternalSdpaBackend(spec[len("external:"):])
    raise ValueError(f"unknown solver backend {spec!r}")


def solve(
    problem: ConicProblem,
    options: SolveOptions | None = None,
    backend=None,
) -> ConicSolution:
    """Solve a ConicProblem through the configured backend."""
    if len(problem.block_dims) == 0 and problem.n_scalars == 0:
        raise ValueError("problem has no variables")
    options = options or SolveOptions()
    backend = backend or get_backend()
    return backend.solve(problem, options)


# -- sparse interchange format -----------------------------------------------


def export_sdpa(problem: ConicProblem, path: str | Path) -> None:
    """Write the problem in sparse block-diagonal interchange text form.

    Layout: row count, block count, block sizes (scalars as a trailing
    negative diagonal block), right-hand sides, then one entry per line
    "matno block i j value" with matno 0 the objective, 1-based indices,
    upper triangle only.  Inequality rows are written with their sense
    encoded in a comment header so the file round-trips losslessly.
    """
    lines: list[str] = []
    senses = "".join({"eq": "E", "ge": "G", "le": "L"}[r.sense] for r in problem.rows)
    lines.append(f'"senses: {senses}"')
    lines.append(f"{problem.n_rows} = mDIM")
    nblocks = len(problem.block_dims) + (1 if problem.n_scalars else 0)
    lines.append(f"{nblocks} = nBLOCK")
    sizes = [str(d) for d in problem.block_dims]
    if problem.n_scalars:
        sizes.append(str(-problem.n_scalars))
    lines.append("{" + ", ".join(sizes) + "}")
    lines.append(" ".join(repr(r.rhs) for r in problem.rows))

    lp_block = len(problem.block_dims) + 1

    def emit(matno: int, block_terms, scalar_terms):
        for b, m in block_terms:
            d = problem.block_dims[b]
            for i in range(d):
                for j in range(i, d):
                    if m[i, j] != 0.0:
                        lines.append(f"{matno} {b + 1} {i + 1} {j + 1} {m[i, j]!r}")
        for i, c in scalar_terms:
            if c != 0.0:
                lines.append(f"{matno} {lp_block} {i + 1} {i + 1} {c!r}")

    emit(0, problem.obj_blocks.items(), problem.obj_scalars.items())
    for k, row in enumerate(problem.rows):
        emit(k + 1, row.block_terms, row.scalar_terms)

    Path(path).write_text("\n".join(lines) + "\n")


def parse_sdpa(path: str | Path) -> ConicProblem:
    """Read a file written by :func:`export_sdpa` back into a ConicProblem."""
    text = Path(path).read_text()
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    senses = ""
    idx = 0
    if lines[0].startswith('"'):
        m = re.search(r"senses:\s*([EGL]*)", lines[0])
        if m:
            senses = m.group(1)
        idx = 1
    m_rows = int(lines[idx].split()[0])
    n_blocks = int(lines[idx + 1].split()[0])
    sizes = [int(s) for s in re.findall(r"-?\d+", lines[idx + 2])]
    if len(sizes) != n_blocks:
        raise ValueError("block size list does not match block count")
    rhs = [float(x) for x in lines[idx + 3].split()]
    if len(rhs) != m_rows:
        raise ValueError("rhs length does not match row count")

    problem = ConicProblem()
    lp_block = None
    for bi, size in enumerate(sizes):
        if size < 0:
            lp_block = bi
            for _ in range(-size):
                problem.add_scalar()
        else:
            problem.add_block(size)

    obj_b: dict[int, np.ndarray] = {}
    obj_s: dict[int, float] = {}
    row_b: list[dict[int, np.ndarray]] = [dict() for _ in range(m_rows)]
    row_s: list[dict[int, float]] = [dict() for _ in range(m_rows)]

    for ln in lines[idx + 4:]:
        parts = ln.split()
        matno, blk, i, j = (int(parts[0]), int(parts[1]) - 1, int(parts[2]) - 1,
                            int(parts[3]) - 1)
        val = float(parts[4])
        if blk == lp_block:
            if matno == 0:
                obj_s[i] = val
            else:
                row_s[matno - 1][i] = val
        else:
            d = sizes[blk]
            tgt = obj_b if matno == 0 else row_b[matno - 1]
            mat = tgt.setdefault(blk, np.zeros((d, d)))
            mat[i, j] = val
            mat[j, i] = val

    for b, mmat in obj_b.items():
        problem.set_block_objective(b, mmat)
    for i, c in obj_s.items():
        problem.set_scalar_objective(i, c)
    for k in range(m_rows):
        sense = {"E": "eq", "G": "ge", "L": "le"}[senses[k]] if senses else "eq"
        problem.add_row(
            sense,
            rhs[k],
            [(b, mmat) for b, mmat in sorted(row_b[k].items())],
            sorted(row_s[k].items()),
        )
    return problem


def _parse_external_result(
    problem: ConicProblem, text: str, options: SolveOptions
) -> ConicSolution:
    """Minimal parser for solver output: objValPrimal plus xMat blocks."""
    m = re.search(r"objValPrimal\s*=\s*([-+0-9.eE]+)", text)
    if m is None:
        raise RuntimeError("external solver output lacks objValPrimal")
    obj = float(m.group(1))
    nums = re.search(r"xMat\s*=\s*\{(.*)\}\s*$", text, re.S)
    if nums is None:
        raise RuntimeError("external solver output lacks xMat")
    vals = [float(v) for v in re.findall(r"[-+0-9.][-+0-9.eE]*", nums.group(1))]
    blocks = []
    pos = 0
    for d in problem.block_dims:
        blk = np.array(vals[pos:pos + d * d]).reshape(d, d)
        blocks.append((blk + blk.T) / 2.0)
        pos += d * d
    scalars = np.array(vals[pos:pos + problem.n_scalars])
    viol = row_violations(problem, blocks, scalars)
    rel = float(viol.max(initial=0.0))
    return ConicSolution(
        block_values=tuple(blocks),
        scalar_values=scalars,
        objective_value=obj,
        status=Status.OPTIMAL,
        residuals=Residuals(primal=rel, dual=float("nan"), gap=float("nan")),
        iterations=0,
    )
