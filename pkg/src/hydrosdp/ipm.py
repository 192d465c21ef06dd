"""Embedded primal-dual interior-point method for small block-diagonal SDPs.

Standard form: min c.x  s.t.  A x = b,  x in K, where K is a product of
svec'd PSD cones (small blocks) and a nonnegative orthant.  Inequality rows
of the incoming ConicProblem are converted with slack scalars.  The method
is Nesterov-Todd scaled path following with Mehrotra predictor-corrector
steps and a dense Cholesky solve of the Schur complement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .conic import ConicProblem, ConicSolution, Residuals, SolveOptions, Status, row_violations

SQRT2 = np.sqrt(2.0)
KKT_REG = 1e-10  # static regularization on the Schur complement diagonal
STEP_FRACTION = 0.98


class _NumericalError(RuntimeError):
    pass


def _svec_dim(d: int) -> int:
    return d * (d + 1) // 2


def _tri_indices(d: int) -> tuple[np.ndarray, np.ndarray]:
    ii, jj = [], []
    for j in range(d):
        for i in range(j + 1):
            ii.append(i)
            jj.append(j)
    return np.array(ii), np.array(jj)


class _Cone:
    """Cone layout: PSD blocks grouped by dimension, then the LP tail."""

    def __init__(self, psd_dims: list[int], lp_n: int):
        self.psd_dims = list(psd_dims)
        self.lp_n = lp_n
        offsets = []
        pos = 0
        for d in psd_dims:
            offsets.append(pos)
            pos += _svec_dim(d)
        self.block_offsets = offsets
        self.lp_start = pos
        self.n = pos + lp_n
        self.nu = sum(psd_dims) + lp_n

        # group blocks by dimension for batched linear algebra
        self.groups: dict[int, dict] = {}
        for d in sorted(set(psd_dims)):
            idxs = [k for k, dd in enumerate(psd_dims) if dd == d]
            nd = _svec_dim(d)
            sv = np.array(
                [[offsets[k] + t for t in range(nd)] for k in idxs], dtype=int
            )
            ti, tj = _tri_indices(d)
            factor = np.where(ti == tj, 1.0, SQRT2)
            self.groups[d] = {
                "blocks": idxs,
                "sv": sv,          # (k, nd) indices into x
                "ti": ti,
                "tj": tj,
                "factor": factor,  # svec scaling per triangular entry
            }

    # -- svec <-> matrices, batched per group --------------------------------
    def to_mats(self, x: np.ndarray) -> dict[int, np.ndarray]:
        out = {}
        for d, g in self.groups.items():
            seg = x[g["sv"]]                       # (k, nd)
            k = seg.shape[0]
            mats = np.zeros((k, d, d))
            vals = seg / g["factor"]
            mats[:, g["ti"], g["tj"]] = vals
            mats[:, g["tj"], g["ti"]] = vals
            out[d] = mats
        return out

    def from_mats(self, mats: dict[int, np.ndarray], lp: np.ndarray) -> np.ndarray:
        x = np.zeros(self.n)
        for d, g in self.groups.items():
            x[g["sv"]] = mats[d][:, g["ti"], g["tj"]] * g["factor"]
        x[self.lp_start:] = lp
        return x

    def lp(self, x: np.ndarray) -> np.ndarray:
        return x[self.lp_start:]

    def identity(self, scale: float) -> np.ndarray:
        mats = {
            d: np.broadcast_to(np.eye(d) * scale, (len(g["blocks"]), d, d)).copy()
            for d, g in self.groups.items()
        }
        return self.from_mats(mats, np.full(self.lp_n, scale))

    def min_eig(self, x: np.ndarray) -> float:
        vals = [np.min(x[self.lp_start:])] if self.lp_n else []
        for d, mats in self.to_mats(x).items():
            if mats.shape[0]:
                vals.append(float(np.linalg.eigvalsh(mats).min()))
        return min(vals) if vals else 0.0


def _sym(mats: np.ndarray) -> np.ndarray:
    return (mats + mats.transpose(0, 2, 1)) / 2.0


def _eigh_pd(mats: np.ndarray, floor: float = 1e-280):
    w, u = np.linalg.eigh(mats)
    if np.min(w) <= 0:
        w = np.maximum(w, floor)
    return w, u


def _power(mats_w, mats_u, exponent: float) -> np.ndarray:
    return (mats_u * (mats_w[:, None, :] ** exponent)) @ mats_u.transpose(0, 2, 1)


class _Scaling:
    """Per-iteration NT scaling data."""

    def __init__(self, cone: _Cone, x: np.ndarray, s: np.ndarray):
        self.cone = cone
        self.xm = cone.to_mats(x)
        self.sm = cone.to_mats(s)
        self.x_lp = cone.lp(x)
        self.s_lp = cone.lp(s)
        self.W = {}
        self.Winv = {}
        self.Xmh = {}       # X^{-1/2}
        self.Smh = {}       # S^{-1/2}
        self.Sinv = {}
        for d in cone.groups:
            X, S = self.xm[d], self.sm[d]
            wx, ux = _eigh_pd(X)
            xh = _power(wx, ux, 0.5)
            self.Xmh[d] = _power(wx, ux, -0.5)
            ws, us = _eigh_pd(S)
            self.Smh[d] = _power(ws, us, -0.5)
            self.Sinv[d] = _power(ws, us, -1.0)
            T = xh @ S @ xh
            wt, ut = _eigh_pd(_sym(T))
            self.W[d] = _sym(xh @ _power(wt, ut, -0.5) @ xh)
            self.Winv[d] = _sym(
                self.Xmh[d] @ _power(wt, ut, 0.5) @ self.Xmh[d]
            )
        self.w2_lp = self.x_lp / self.s_lp if cone.lp_n else np.zeros(0)
        # symmetric square roots of W, for solving in the scaled space
        self.Wh = {}
        self.Whinv = {}
        for d in cone.groups:
            ww, uw = _eigh_pd(self.W[d])
            self.Wh[d] = _power(ww, uw, 0.5)
            self.Whinv[d] = _power(ww, uw, -0.5)

    def _op_data(self, mats: dict[int, np.ndarray], lp_diag: np.ndarray) -> np.ndarray:
        """Dense data of the svec operator Z -> M Z M, per group then LP diag."""
        cone = self.cone
        chunks = []
        for d, g in cone.groups.items():
            Mb = mats[d]
            k = Mb.shape[0]
            nd = len(g["ti"])
            op = np.zeros((k, nd, nd))
            for t in range(nd):
                a, bcol = g["ti"][t], g["tj"][t]
                wa = Mb[:, :, a]
                wb = Mb[:, :, bcol]
                outer = wa[:, :, None] * wb[:, None, :]
                mat = _sym(outer)
                if a != bcol:
                    mat = mat * SQRT2
                op[:, :, t] = mat[:, g["ti"], g["tj"]] * g["factor"][None, :]
            chunks.append(op.reshape(-1))
        chunks.append(lp_diag)
        return np.concatenate(chunks) if chunks else np.zeros(0)

    def wop_data(self) -> np.ndarray:
        return self._op_data(self.W, self.w2_lp)

    def winv_op_data(self) -> np.ndarray:
        lp = self.s_lp / self.x_lp if self.cone.lp_n else np.zeros(0)
        return self._op_data(self.Winv, lp)

    def wh_op_data(self) -> np.ndarray:
        return self._op_data(self.Wh, np.sqrt(self.w2_lp))

    def whinv_op_data(self) -> np.ndarray:
        return self._op_data(self.Whinv, 1.0 / np.sqrt(self.w2_lp))

    def sinv_vec(self) -> np.ndarray:
        mats = {d: self.Sinv[d] for d in self.cone.groups}
        lp = 1.0 / self.s_lp if self.cone.lp_n else np.zeros(0)
        return self.cone.from_mats(mats, lp)

    def max_step_primal(self, dx: np.ndarray) -> float:
        return self._max_step(self.Xmh, self.x_lp, dx)

    def max_step_dual(self, ds: np.ndarray) -> float:
        return self._max_step(self.Smh, self.s_lp, ds)

    def _max_step(self, mh, lp_vals, dvec) -> float:
        cone = self.cone
        alpha = np.inf
        dm = cone.to_mats(dvec)
        for d in cone.groups:
            if dm[d].shape[0] == 0:
                continue
            T = _sym(mh[d] @ dm[d] @ mh[d])
            lam = np.linalg.eigvalsh(T)[:, 0].min()
            if lam < 0:
                alpha = min(alpha, -1.0 / lam)
        d_lp = cone.lp(dvec)
        if cone.lp_n:
            neg = d_lp < 0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-lp_vals[neg] / d_lp[neg])))
        return alpha

    def corrector_vec(self, dx: np.ndarray, ds: np.ndarray) -> np.ndarray:
        """svec of sym(dX dS S^{-1}) per block; dx*ds/s on the LP tail."""
        cone = self.cone
        dxm = cone.to_mats(dx)
        dsm = cone.to_mats(ds)
        mats = {d: _sym(dxm[d] @ dsm[d] @ self.Sinv[d]) for d in cone.groups}
        lp = (
            cone.lp(dx) * cone.lp(ds) / self.s_lp if cone.lp_n else np.zeros(0)
        )
        return cone.from_mats(mats, lp)


@dataclass
class _StandardForm:
    cone: _Cone
    A: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    obj_scale: float
    n_blocks: int
    n_scalars: int
    block_scales: list[np.ndarray]
    scalar_scales: np.ndarray


def _standardize(problem: ConicProblem) -> _StandardForm:
    n_ineq = sum(1 for r in problem.rows if r.sense != "eq")
    lp_n = problem.n_scalars + n_ineq
    cone = _Cone(problem.block_dims, lp_n)

    # congruence preconditioning: solve for X' = D^{-1} X D^{-1}, so every
    # data matrix M becomes D M D and block entries stay near unit magnitude
    block_scales = [
        sc if sc is not None else np.ones(d)
        for sc, d in zip(problem.block_scales, problem.block_dims)
    ]
    scalar_scales = np.asarray(problem.scalar_scales, dtype=float)

    rows_i: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    b = np.zeros(problem.n_rows)

    def svec_entries(block: int, mat: np.ndarray):
        d = problem.block_dims[block]
        g = cone.groups[d]
        base = cone.block_offsets[block]
        sc = block_scales[block]
        coeffs = mat[g["ti"], g["tj"]] * sc[g["ti"]] * sc[g["tj"]] * g["factor"]
        return base + np.arange(len(coeffs)), coeffs

    for k, row in enumerate(problem.rows):
        sign = -1.0 if row.sense == "le" else 1.0
        for blk, mat in row.block_terms:
            idx, coeffs = svec_entries(blk, mat)
            nz = coeffs != 0.0
            rows_i.extend([k] * int(nz.sum()))
            cols.extend(idx[nz].tolist())
            vals.extend((sign * coeffs[nz]).tolist())
        for i, coef in row.scalar_terms:
            if coef != 0.0:
                rows_i.append(k)
                cols.append(cone.lp_start + i)
                vals.append(sign * coef * scalar_scales[i])
        b[k] = sign * row.rhs

    A = sp.csr_matrix(
        (vals, (rows_i, cols)), shape=(problem.n_rows, cone.n)
    )

    # row equilibration of the structural part by max absolute coefficient
    row_max = np.zeros(problem.n_rows)
    absA = abs(A)
    for k in range(problem.n_rows):
        seg = absA.data[absA.indptr[k]:absA.indptr[k + 1]]
        row_max[k] = seg.max() if seg.size else 1.0
    row_max = np.maximum(row_max, 1e-12)
    D = sp.diags(1.0 / row_max)
    A = D @ A
    b = b / row_max

    # inequality slacks are appended after equilibration so their columns
    # stay at unit magnitude regardless of the row's structural scale
    slack_rows = [k for k, row in enumerate(problem.rows) if row.sense != "eq"]
    if slack_rows:
        S = sp.csr_matrix(
            (
                -np.ones(len(slack_rows)),
                (slack_rows, np.arange(len(slack_rows))),
            ),
            shape=(problem.n_rows, len(slack_rows)),
        )
        A = sp.hstack(
            [A[:, : cone.lp_start + problem.n_scalars], S], format="csr"
        )

    c = np.zeros(cone.n)
    for blk, mat in problem.obj_blocks.items():
        idx, coeffs = svec_entries(blk, mat)
        c[idx] += coeffs
    for i, coef in problem.obj_scalars.items():
        c[cone.lp_start + i] += coef * scalar_scales[i]
    obj_scale = max(1.0, float(np.abs(c).max(initial=0.0)))
    c = c / obj_scale

    return _StandardForm(
        cone=cone,
        A=A.tocsr(),
        b=b,
        c=c,
        obj_scale=obj_scale,
        n_blocks=len(problem.block_dims),
        n_scalars=problem.n_scalars,
        block_scales=block_scales,
        scalar_scales=scalar_scales,
    )


class _KKTFactor:
    """Sparse LU of the NT-scaled quasi-definite KKT system.

    With As = A W^{1/2} (the constraint matrix in the scaled space), solves

        [-I    As^T] [dxs]   [r1]
        [ As   dI  ] [dy ] = [r2]

    where the identity top-left keeps conditioning linear in cond(As), plus
    two steps of iterative refinement against the unregularized system.
    """

    def __init__(self, As: sp.csr_matrix):
        self.As = As
        self.AsT = As.T.tocsr()
        m, n = As.shape
        self.n, self.m = n, m
        # refinement residuals in extended precision: the scaled constraint
        # matrix has entries up to ~1/sqrt(mu), and float64 cancellation
        # would floor the attainable residual far above tolerance
        self.Asd = As.toarray().astype(np.longdouble)
        self.AsTd = self.Asd.T
        # plain LU with partial pivoting handles the saddle system directly;
        # regularization is a fallback only, since the delta*dy error it
        # introduces is exactly what iterative refinement cannot remove when
        # the duals are large
        last_err: Exception | None = None
        delta = 0.0
        probe = np.ones(n + m)
        for _ in range(5):
            K = sp.bmat(
                [
                    [-(1.0 + delta) * sp.eye(n), self.AsT],
                    [As, delta * sp.eye(m)],
                ],
                format="csc",
            )
            try:
                lu = spla.splu(K)
                # splu can "succeed" on a singular matrix and emit non-finite
                # solves; probe before accepting the factorization
                if np.isfinite(lu.solve(probe)).all():
                    self.lu = lu
                    return
                last_err = _NumericalError("singular KKT factorization")
            except RuntimeError as err:
                last_err = err
            delta = KKT_REG if delta == 0.0 else delta * 1e4
        raise _NumericalError(f"KKT factorization failed: {last_err}")

    def solve(self, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rhs = np.concatenate([r1, r2])
        sol = self.lu.solve(rhs)
        if not np.isfinite(sol).all():
            raise _NumericalError("KKT solve produced non-finite values")
        r1d = r1.astype(np.longdouble)
        r2d = r2.astype(np.longdouble)
        best_sol, best_norm = sol, np.inf
        for _ in range(3):
            dxs = sol[: self.n].astype(np.longdouble)
            dy = sol[self.n:].astype(np.longdouble)
            res1 = np.asarray(r1d + dxs - self.AsTd @ dy, dtype=np.float64)
            res2 = np.asarray(r2d - self.Asd @ dxs, dtype=np.float64)
            norm = max(np.abs(res1).max(initial=0.0), np.abs(res2).max(initial=0.0))
            if norm < best_norm:
                best_sol, best_norm = sol, norm
            elif not np.isfinite(norm):
                break
            sol = sol + self.lu.solve(np.concatenate([res1, res2]))
            if not np.isfinite(sol).all():
                sol = best_sol
                break
        return sol[: self.n], sol[self.n:]


def _wop_matrix(cone: _Cone, data: np.ndarray, pattern) -> sp.csr_matrix:
    rows, cols = pattern
    return sp.csr_matrix((data, (rows, cols)), shape=(cone.n, cone.n))


def _wop_pattern(cone: _Cone) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = [], []
    for d, g in cone.groups.items():
        nd = len(g["ti"])
        for start in g["sv"][:, 0]:
            block_rows = np.repeat(np.arange(start, start + nd), nd)
            block_cols = np.tile(np.arange(start, start + nd), nd)
            rows.append(block_rows)
            cols.append(block_cols)
    if cone.lp_n:
        lp_idx = np.arange(cone.lp_start, cone.n)
        rows.append(lp_idx)
        cols.append(lp_idx)
    if rows:
        return np.concatenate(rows), np.concatenate(cols)
    return np.zeros(0, dtype=int), np.zeros(0, dtype=int)


def solve_conic(problem: ConicProblem, options: SolveOptions) -> ConicSolution:
    sf = _standardize(problem)
    cone, A, b, c = sf.cone, sf.A, sf.b, sf.c
    m = A.shape[0]
    AT = A.T.tocsr()
    pattern = _wop_pattern(cone)

    # residuals in extended precision: constraints without strict cone
    # interior (e.g. envelope cuts pinning a lifted diagonal) make the dual
    # variables grow like 1/sqrt(mu), and the float64 cancellation floor
    # ||y||*eps would otherwise stall dual feasibility above tolerance
    Ad = A.toarray().astype(np.longdouble)
    ATd = Ad.T
    bd = b.astype(np.longdouble)
    cd = c.astype(np.longdouble)

    def residuals(x, y, s):
        rp = np.asarray(bd - Ad @ x.astype(np.longdouble), dtype=np.float64)
        rd = np.asarray(
            cd - ATd @ y.astype(np.longdouble) - s.astype(np.longdouble),
            dtype=np.float64,
        )
        return rp, rd

    scale0 = max(10.0, float(np.sqrt(np.abs(b).max(initial=0.0) + 1.0)))
    x = cone.identity(scale0)
    s = cone.identity(max(10.0, float(np.abs(c).max(initial=0.0) + 1.0)))
    y = np.zeros(m)

    b_norm = 1.0 + float(np.abs(b).max(initial=0.0))
    c_norm = 1.0 + float(np.abs(c).max(initial=0.0))

    status = Status.MAX_ITER
    iters = 0
    best = (np.inf, x, y, s)
    try:
        for it in range(options.max_iter):
            iters = it
            rp, rd = residuals(x, y, s)
            mu = float(x @ s) / cone.nu
            pobj = float(c @ x)
            dobj = float(b @ y)
            rp_rel = float(np.abs(rp).max(initial=0.0)) / b_norm
            rd_rel = float(np.abs(rd).max(initial=0.0)) / c_norm
            gap_rel = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
            mu_rel = mu / (1.0 + abs(pobj))

            merit = max(rp_rel, rd_rel, min(gap_rel, mu_rel))
            if merit < best[0]:
                best = (merit, x.copy(), y.copy(), s.copy())

            if (
                rp_rel <= options.feas_tol
                and rd_rel <= options.feas_tol
                and (gap_rel <= options.gap_tol or mu_rel <= options.gap_tol)
            ):
                status = Status.OPTIMAL
                break

            # certificate-based infeasibility / unboundedness heuristics:
            # the normalized certificate value must dominate its residual
            y_norm = float(np.abs(y).max(initial=0.0))
            if y_norm > 1e4:
                yn = y / y_norm
                sn = s / y_norm
                cert_res = float(np.abs(A.T @ yn + sn).max())
                # the residual of a true certificate ray shrinks like
                # 1/||y||, so once the duals are huge a proportionally
                # looser tolerance still rejects feasible problems (whose
                # normalized residual floors at ||c||/||y||)
                cert_tol = 1e-7 if y_norm > 1e6 else 1e-9
                if cert_res <= cert_tol and float(b @ yn) > 1e-5:
                    status = Status.INFEASIBLE
                    break
            x_norm = float(np.abs(x).max(initial=0.0))
            if x_norm > 1e7 * scale0:
                xn = x / x_norm
                if (
                    float(np.abs(A @ xn).max()) <= 1e-9
                    and float(c @ xn) < -1e-5
                    and cone.min_eig(xn) >= -1e-9
                ):
                    status = Status.UNBOUNDED
                    break

            scaling = _Scaling(cone, x, s)
            Wh = _wop_matrix(cone, scaling.wh_op_data(), pattern)
            Whinv = _wop_matrix(cone, scaling.whinv_op_data(), pattern)
            As = (A @ Wh).tocsr()
            factor = _KKTFactor(As)
            rd_s = Wh @ rd

            def direction(h: np.ndarray):
                dxs, dy = factor.solve(rd_s - Whinv @ h, rp)
                dx = Wh @ dxs
                ds = rd - AT @ dy
                if not (np.isfinite(dx).all() and np.isfinite(ds).all()):
                    raise _NumericalError("search direction is non-finite")
                return dx, dy, ds

            # predictor (affine scaling)
            dx_a, dy_a, ds_a = direction(-x)
            ap = min(1.0, STEP_FRACTION * scaling.max_step_primal(dx_a))
            ad = min(1.0, STEP_FRACTION * scaling.max_step_dual(ds_a))
            mu_aff = float((x + ap * dx_a) @ (s + ad * ds_a)) / cone.nu
            sigma = min(0.99, max(1e-8, (max(mu_aff, 0.0) / mu) ** 3))

            # corrector
            sinv = scaling.sinv_vec()
            h = sigma * mu * sinv - x - scaling.corrector_vec(dx_a, ds_a)
            dx, dy, ds = direction(h)
            ap_c = min(1.0, STEP_FRACTION * scaling.max_step_primal(dx))
            ad_c = min(1.0, STEP_FRACTION * scaling.max_step_dual(ds))
            if min(ap_c, ad_c) < 0.05 * min(ap, ad):
                # corrector hurt; fall back to a centered predictor step
                h = sigma * mu * sinv - x
                dx, dy, ds = direction(h)
                ap_c = min(1.0, STEP_FRACTION * scaling.max_step_primal(dx))
                ad_c = min(1.0, STEP_FRACTION * scaling.max_step_dual(ds))

            x = x + ap_c * dx
            y = y + ad_c * dy
            s = s + ad_c * ds
            if not (np.isfinite(x).all() and np.isfinite(s).all()):
                raise _NumericalError("iterate diverged to non-finite values")
            if float(np.abs(x).max()) > 1e14 or float(np.abs(s).max()) > 1e14:
                raise _NumericalError("iterate magnitude overflow")
        else:
            iters = options.max_iter
    except (_NumericalError, np.linalg.LinAlgError):
        status = Status.NUMERICAL_FAILURE

    if status in (Status.MAX_ITER, Status.NUMERICAL_FAILURE) and np.isfinite(best[0]):
        # report the best iterate seen rather than the last (possibly diverged) one
        _, x, y, s = best

    return _extract(problem, sf, x, y, s, status, iters, options)


def _extract(
    problem: ConicProblem,
    sf: _StandardForm,
    x: np.ndarray,
    y: np.ndarray,
    s: np.ndarray,
    status: str,
    iters: int,
    options: SolveOptions,
) -> ConicSolution:
    cone = sf.cone
    mats = cone.to_mats(x)
    blocks: list[np.ndarray] = []
    for blk, d in enumerate(problem.block_dims):
        g = cone.groups[d]
        pos_in_group = g["blocks"].index(blk)
        sc = sf.block_scales[blk]
        blocks.append(mats[d][pos_in_group] * np.outer(sc, sc))
    scalars = cone.lp(x)[: sf.n_scalars] * sf.scalar_scales

    objective = problem.objective_value(blocks, scalars)
    viol = row_violations(problem, blocks, scalars)
    rhs_scale = np.array([1.0 + abs(r.rhs) for r in problem.rows])
    primal = float((viol / rhs_scale).max(initial=0.0))
    rd_ld = (
        sf.c.astype(np.longdouble)
        - sf.A.toarray().astype(np.longdouble).T @ y.astype(np.longdouble)
        - s.astype(np.longdouble)
    )
    dual = float(np.abs(np.asarray(rd_ld, dtype=np.float64)).max(initial=0.0)) / (
        1.0 + float(np.abs(sf.c).max(initial=0.0))
    )
    pobj = float(sf.c @ x)
    dobj = float(sf.b @ y)
    # complementarity-based gap measure: mean per-dimension duality gap
    mu_rel = (float(x @ s) / cone.nu) / (1.0 + abs(pobj))
    gap = min(abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj)), abs(mu_rel))

    return ConicSolution(
        block_values=tuple(blocks),
        scalar_values=scalars,
        objective_value=objective,
        status=status,
        residuals=Residuals(primal=primal, dual=dual, gap=gap),
        iterations=iters,
    )
