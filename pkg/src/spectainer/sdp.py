"""Self-contained dense primal-dual interior-point solver for block-diagonal
semidefinite programs, plus SDPA-sparse import/export.

Problem convention (primal / dual):

    maximize   <C, X> + g @ u          minimize   b @ y
    s.t.       <A_i, X> + F_i @ u = b_i  s.t.     sum_i y_i A_i - C = S >= 0
               X >= 0 (blockwise), u free         F^T y = g

Blocks are either dense psd ("sdp") or elementwise-nonnegative diagonal
("diag"); ``u`` is an optional vector of free scalars (margins, ideal
multipliers) handled natively rather than split, which keeps the central
path bounded.  The solver is an infeasible-start path-following method with
the HKM direction and a Mehrotra predictor-corrector step, dense Cholesky on
the Schur complement.  Everything is deterministic: fixed iteration order,
no randomized pivoting.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ContractViolation, NumericalFailure

STATUS_OPTIMAL = "Optimal"
STATUS_PRIMAL_INFEASIBLE = "PrimalInfeasible"
STATUS_DUAL_INFEASIBLE = "DualInfeasible"
STATUS_STALLED = "Stalled"

# Margin above which a feasibility problem counts as strictly feasible and
# below whose negative it counts as infeasible.
FEAS_TOL = 1e-7


@dataclass(frozen=True)
class BlockSpec:
    size: int
    kind: str  # "sdp" | "diag"

    def __post_init__(self):
        if self.kind not in ("sdp", "diag"):
            raise ContractViolation(f"unknown block kind {self.kind!r}")
        if self.size < 1:
            raise ContractViolation("block size must be >= 1")


class BlockMatrix:
    """Block-diagonal symmetric matrix conforming to a tuple of BlockSpecs.

    Dense psd blocks are stored as (n, n) arrays, diagonal blocks as (n,)
    vectors.
    """

    __slots__ = ("specs", "blocks")

    def __init__(self, specs, blocks):
        self.specs = tuple(specs)
        if len(blocks) != len(self.specs):
            raise ContractViolation("block count mismatch")
        out = []
        for spec, blk in zip(self.specs, blocks):
            a = np.asarray(blk, dtype=float)
            if spec.kind == "sdp":
                if a.shape != (spec.size, spec.size):
                    raise ContractViolation(
                        f"expected ({spec.size},{spec.size}) block, got {a.shape}"
                    )
                a = 0.5 * (a + a.T)
            else:
                a = a.reshape(-1)
                if a.shape != (spec.size,):
                    raise ContractViolation(
                        f"expected length-{spec.size} diagonal block, got {a.shape}"
                    )
            out.append(a)
        self.blocks = out

    @classmethod
    def _raw(cls, specs, blocks):
        """Internal fast path: no validation, no symmetrization.

        Solver arithmetic needs genuinely non-symmetric intermediates
        (e.g. X @ Rd), which the public constructor would corrupt.
        """
        obj = cls.__new__(cls)
        obj.specs = tuple(specs)
        obj.blocks = blocks
        return obj

    @classmethod
    def zeros(cls, specs):
        return cls._raw(
            specs,
            [
                np.zeros((s.size, s.size)) if s.kind == "sdp" else np.zeros(s.size)
                for s in specs
            ],
        )

    @classmethod
    def identity(cls, specs, scale=1.0):
        return cls._raw(
            specs,
            [
                scale * np.eye(s.size) if s.kind == "sdp" else scale * np.ones(s.size)
                for s in specs
            ],
        )

    def copy(self):
        return BlockMatrix._raw(self.specs, [b.copy() for b in self.blocks])

    def inner(self, other):
        return float(
            sum(np.sum(a * b) for a, b in zip(self.blocks, other.blocks))
        )

    def norm(self):
        return float(np.sqrt(sum(np.sum(b * b) for b in self.blocks)))

    def scaled(self, t):
        return BlockMatrix._raw(self.specs, [t * b for b in self.blocks])

    def plus(self, other, scale=1.0):
        return BlockMatrix._raw(
            self.specs,
            [a + scale * b for a, b in zip(self.blocks, other.blocks)],
        )

    def min_eigval(self):
        worst = np.inf
        for spec, blk in zip(self.specs, self.blocks):
            if spec.kind == "sdp":
                worst = min(worst, float(np.linalg.eigvalsh(blk)[0]))
            else:
                worst = min(worst, float(np.min(blk)) if blk.size else np.inf)
        return worst

    def ravel(self):
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    def tolist(self):
        return [b.tolist() for b in self.blocks]


class SdpProblem:
    """Standard-form block-diagonal SDP with optional free scalars.

    Constraint matrices are deduplicated to an independent set at build time;
    a dependent row with inconsistent right-hand side is recorded as an exact
    infeasibility certificate.
    """

    def __init__(self, specs, objective, constraints, rhs, labels=None,
                 free_coeffs=None, free_obj=None):
        self.specs = tuple(specs)
        self.C = (
            objective
            if isinstance(objective, BlockMatrix)
            else BlockMatrix(self.specs, objective)
        )
        self.constraints = [
            a if isinstance(a, BlockMatrix) else BlockMatrix(self.specs, a)
            for a in constraints
        ]
        self.b = np.asarray(rhs, dtype=float).reshape(-1)
        if len(self.b) != len(self.constraints):
            raise ContractViolation("rhs length must match constraint count")
        m = len(self.b)
        if free_coeffs is None:
            free_coeffs = np.zeros((m, 0))
        self.F = np.asarray(free_coeffs, dtype=float).reshape(m, -1)
        nf = self.F.shape[1]
        if free_obj is None:
            free_obj = np.zeros(nf)
        self.g = np.asarray(free_obj, dtype=float).reshape(-1)
        if self.g.shape != (nf,):
            raise ContractViolation("free objective length mismatch")
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != len(self.constraints):
            raise ContractViolation("label count mismatch")
        self._reduction = None

    @property
    def n_constraints(self):
        return len(self.constraints)

    @property
    def n_free(self):
        return self.F.shape[1]

    @property
    def n_total(self):
        return sum(s.size for s in self.specs)

    def reduction(self, tol=1e-10):
        """Independent constraint subset plus any exact infeasibility ray."""
        if self._reduction is None:
            self._reduction = _reduce_constraints(self, tol)
        return self._reduction


@dataclass
class _Reduction:
    kept: np.ndarray  # indices of independent constraints
    free_kept: np.ndarray  # indices of independent free columns
    infeasible_ray: np.ndarray | None  # y over all constraints, or None


def _reduce_constraints(problem, tol):
    m = problem.n_constraints
    nf = problem.n_free
    free_kept = np.arange(nf)
    if nf:
        # Dependent free columns are redundant directions; dropping one must
        # not change the objective, which we verify.
        ft = problem.F
        _, r, piv = sla.qr(ft, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > 1e-12 * max(diag[0], 1e-300))) if diag.size else 0
        free_kept = np.sort(piv[:rank])
        dropped = np.sort(piv[rank:])
        if dropped.size:
            fk = ft[:, free_kept]
            gram = fk.T @ fk
            for j in dropped:
                coeff = np.linalg.solve(
                    gram + 1e-14 * np.eye(len(free_kept)), fk.T @ ft[:, j]
                )
                if abs(problem.g[j] - coeff @ problem.g[free_kept]) > 1e-9 * (
                    1.0 + np.linalg.norm(problem.g)
                ):
                    raise ContractViolation(
                        "objective weights a dependent free-variable direction"
                    )
    if m == 0:
        return _Reduction(np.array([], dtype=int), free_kept, None)
    v = np.hstack(
        [np.stack([a.ravel() for a in problem.constraints]), problem.F]
    )
    scale = np.linalg.norm(v, axis=1)
    scale[scale == 0] = 1.0
    _, r, piv = sla.qr((v / scale[:, None]).T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * max(diag[0], 1e-300))) if diag.size else 0
    kept = np.sort(piv[:rank])
    dropped = np.sort(piv[rank:])
    if dropped.size == 0:
        return _Reduction(kept, free_kept, None)
    vk = v[kept]
    gram = vk @ vk.T
    for j in dropped:
        coeff = np.linalg.solve(gram + 1e-14 * np.eye(len(kept)), vk @ v[j])
        resid = problem.b[j] - coeff @ problem.b[kept]
        if abs(resid) > 1e-8 * (1.0 + np.linalg.norm(problem.b)):
            # Exact Farkas ray: A^T(ray) = 0, F^T ray = 0, but b @ ray != 0.
            ray = np.zeros(m)
            ray[j] = 1.0
            ray[kept] = -coeff
            ray *= -np.sign(resid)  # so that b @ ray < 0
            return _Reduction(kept, free_kept, ray)
    return _Reduction(kept, free_kept, None)


@dataclass
class SolveOptions:
    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98


@dataclass
class SdpSolution:
    status: str
    X: BlockMatrix | None
    y: np.ndarray | None
    S: BlockMatrix | None
    u: np.ndarray | None = None
    primal_objective: float = np.nan
    dual_objective: float = np.nan
    residuals: dict = field(default_factory=dict)
    iterations: int = 0
    ray: object = None  # Farkas ray (vector y, or BlockMatrix X for dual side)

    @property
    def optimal(self):
        return self.status == STATUS_OPTIMAL

    def to_json(self):
        """Deterministic serialization (no timing data)."""
        payload = {
            "status": self.status,
            "primal_objective": repr(self.primal_objective),
            "dual_objective": repr(self.dual_objective),
            "residuals": {k: repr(v) for k, v in sorted(self.residuals.items())},
            "iterations": self.iterations,
            "X": self.X.tolist() if self.X is not None else None,
            "y": self.y.tolist() if self.y is not None else None,
            "S": self.S.tolist() if self.S is not None else None,
            "u": self.u.tolist() if self.u is not None else None,
        }
        return json.dumps(payload, sort_keys=True)


def _chol(block):
    try:
        return sla.cholesky(block, lower=True)
    except sla.LinAlgError as exc:
        raise NumericalFailure(f"Cholesky failed: {exc}") from exc


def _max_step(spec, current, direction):
    """Largest alpha with current + alpha * direction staying in the cone."""
    if spec.kind == "diag":
        neg = direction < 0
        if not np.any(neg):
            return np.inf
        return float(np.min(-current[neg] / direction[neg]))
    ell = _chol(current)
    y = sla.solve_triangular(ell, direction, lower=True)
    t = sla.solve_triangular(ell, y.T, lower=True)
    lam = float(np.linalg.eigvalsh(0.5 * (t + t.T))[0])
    if lam >= -1e-16:
        return np.inf
    return -1.0 / lam


class _Workspace:
    """Per-solve stacked constraint data for one reduced problem.

    Constraints are normalized to unit Frobenius norm (a diagonal
    preconditioner for the Schur complement); ``row_scale`` maps the scaled
    dual variables back to the original ones (y_orig = y_scaled / s).
    """

    def __init__(self, problem, red):
        self.specs = problem.specs
        kept = red.kept
        self.m = len(kept)
        raw_norm = np.array(
            [
                np.sqrt(
                    problem.constraints[i].norm() ** 2
                    + float(problem.F[i, red.free_kept] @ problem.F[i, red.free_kept])
                )
                for i in kept
            ]
        ) if self.m else np.zeros(0)
        scale = np.where(raw_norm > 0, raw_norm, 1.0)
        self.row_scale = scale
        self.b = problem.b[kept] / scale
        self.C = problem.C
        self.F = problem.F[np.ix_(kept, red.free_kept)] / scale[:, None]
        self.g = problem.g[red.free_kept]
        self.nf = self.F.shape[1]
        self.stacks = []
        for bi, spec in enumerate(self.specs):
            if self.m:
                arr = np.stack(
                    [
                        problem.constraints[i].blocks[bi] / s
                        for i, s in zip(kept, scale)
                    ]
                )
            elif spec.kind == "sdp":
                arr = np.zeros((0, spec.size, spec.size))
            else:
                arr = np.zeros((0, spec.size))
            self.stacks.append(arr)
        self.norm_a = np.ones(self.m)

    def op_a(self, x):
        out = np.zeros(self.m)
        for spec, stack, blk in zip(self.specs, self.stacks, x.blocks):
            if spec.kind == "sdp":
                out += stack.reshape(self.m, -1) @ blk.reshape(-1)
            else:
                out += stack @ blk
        return out

    def op_at(self, y):
        blocks = []
        for spec, stack in zip(self.specs, self.stacks):
            if spec.kind == "sdp":
                blocks.append(np.tensordot(y, stack, axes=1))
            else:
                blocks.append(stack.T @ y)
        return BlockMatrix._raw(self.specs, blocks)

    def schur(self, x, zinv):
        m = self.m
        out = np.zeros((m, m))
        for spec, stack, xb, zib in zip(self.specs, self.stacks, x.blocks, zinv.blocks):
            if spec.kind == "sdp":
                w = np.matmul(np.matmul(xb[None, :, :], stack), zib[None, :, :])
                out += stack.reshape(m, -1) @ w.reshape(m, -1).T
            else:
                w = stack * (xb * zib)
                out += w @ stack.T
        return 0.5 * (out + out.T)


def _zinv(specs, z):
    blocks = []
    for spec, blk in zip(specs, z.blocks):
        if spec.kind == "sdp":
            ell = _chol(blk)
            inv = sla.cho_solve((ell, True), np.eye(spec.size))
            blocks.append(0.5 * (inv + inv.T))
        else:
            blocks.append(1.0 / blk)
    return BlockMatrix._raw(specs, blocks)


def _mul(specs, a, b):
    """Blockwise product of two BlockMatrix values (not symmetric in general)."""
    blocks = []
    for spec, x, y in zip(specs, a.blocks, b.blocks):
        blocks.append(x @ y if spec.kind == "sdp" else x * y)
    return BlockMatrix._raw(specs, blocks)


def _factor_spd(mat):
    """Cholesky with escalating jitter; returns factor or None."""
    n = mat.shape[0]
    scale = max(float(np.max(np.abs(np.diag(mat)))), 1e-30)
    for exp in (0.0, 1e-14, 1e-12, 1e-10, 1e-8):
        try:
            return sla.cholesky(mat + exp * scale * np.eye(n), lower=True)
        except sla.LinAlgError:
            continue
    return None


def _solve_refined(mat, ell, rhs, rounds=2):
    """cho_solve with iterative refinement against the unfactored matrix;
    rescues accuracy once the Schur complement turns ill-conditioned."""
    sol = sla.cho_solve((ell, True), rhs)
    for _ in range(rounds):
        resid = rhs - mat @ sol
        sol = sol + sla.cho_solve((ell, True), resid)
    return sol


def solve(problem, options=None):
    """Solve an SdpProblem; reports infeasibility or stalls via status."""
    opts = options or SolveOptions()
    red = problem.reduction()
    if red.infeasible_ray is not None:
        return SdpSolution(
            status=STATUS_PRIMAL_INFEASIBLE,
            X=None, y=None, S=None,
            ray=red.infeasible_ray,
        )
    ws = _Workspace(problem, red)
    specs = problem.specs
    ntot = problem.n_total
    m = ws.m
    nf = ws.nf

    if m == 0:
        top = -BlockMatrix.zeros(specs).plus(problem.C, -1.0).min_eigval()
        if np.linalg.norm(ws.g) > 0:
            return SdpSolution(STATUS_DUAL_INFEASIBLE, None, None, None)
        if top <= opts.tol_dual * (1 + problem.C.norm()):
            x0 = BlockMatrix.zeros(specs)
            return SdpSolution(
                STATUS_OPTIMAL, x0, np.zeros(0), problem.C.scaled(-1.0),
                u=np.zeros(problem.n_free),
                primal_objective=0.0, dual_objective=0.0,
                residuals={"primal": 0.0, "dual": 0.0, "gap": 0.0},
            )
        return SdpSolution(STATUS_DUAL_INFEASIBLE, None, None, None)

    norm_b = np.linalg.norm(ws.b)
    norm_c = problem.C.norm()
    max_na = float(np.max(ws.norm_a)) if m else 0.0

    ratio = np.max((1.0 + np.abs(ws.b)) / (1.0 + ws.norm_a)) if m else 1.0
    xi = max(10.0, np.sqrt(ntot), ntot * ratio)
    eta = max(10.0, np.sqrt(ntot), max_na, norm_c / max(1.0, np.sqrt(ntot)))

    x = BlockMatrix.identity(specs, xi)
    z = BlockMatrix.identity(specs, eta)
    y = np.zeros(m)
    u = np.zeros(nf)

    best = None
    status = STATUS_STALLED
    it = 0
    for it in range(1, opts.max_iter + 1):
        aty = ws.op_at(y)
        rp = ws.b - ws.op_a(x) - (ws.F @ u if nf else 0.0)
        rg = ws.g - ws.F.T @ y if nf else np.zeros(0)
        rd = problem.C.plus(aty, -1.0).plus(z, 1.0)  # C - A^T y + Z
        pobj = problem.C.inner(x) + (float(ws.g @ u) if nf else 0.0)
        dobj = float(ws.b @ y)
        relp = np.linalg.norm(rp) / (1.0 + norm_b)
        reld = rd.norm() / (1.0 + norm_c)
        relf = np.linalg.norm(rg) / (1.0 + np.linalg.norm(ws.g)) if nf else 0.0
        relg = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        merit = max(relp, reld, relf, relg)
        if best is None or merit < best[0]:
            best = (merit, x.copy(), y.copy(), z.copy(), u.copy(), pobj, dobj,
                    {"primal": max(relp, relf), "dual": reld, "gap": relg}, it)
        if (relp <= opts.tol_primal and relf <= opts.tol_primal
                and reld <= opts.tol_dual and relg <= opts.tol_gap):
            status = STATUS_OPTIMAL
            best = (merit, x, y, z, u, pobj, dobj,
                    {"primal": max(relp, relf), "dual": reld, "gap": relg}, it)
            break
        if merit > 1e3 * best[0] and it > 5:
            break  # diverging; fall back to the best iterate

        # Validated Farkas rays.
        ynorm = np.linalg.norm(y)
        if ynorm > 1e-8:
            yhat = y / ynorm
            val = float(ws.b @ yhat)
            ok_free = (not nf) or np.linalg.norm(ws.F.T @ yhat) <= 1e-10
            if val < -1e-7 and ok_free:
                cand = ws.op_at(yhat)
                if cand.min_eigval() >= -1e-12 * (1.0 + cand.norm()):
                    full = np.zeros(problem.n_constraints)
                    full[red.kept] = (yhat / ws.row_scale) / abs(val)
                    return SdpSolution(
                        STATUS_PRIMAL_INFEASIBLE, None, None, None,
                        iterations=it, ray=full,
                    )
        xnorm = x.norm()
        if xnorm > 1e-8 and not nf:
            xhat = x.scaled(1.0 / xnorm)
            cval = problem.C.inner(xhat)
            if cval > 1e-7 and np.linalg.norm(ws.op_a(xhat)) <= 1e-12 * (1 + norm_b):
                return SdpSolution(
                    STATUS_DUAL_INFEASIBLE, None, None, None,
                    iterations=it, ray=xhat,
                )
        if ynorm > 1e13 or xnorm > 1e13:
            break

        mu = x.inner(z) / ntot
        try:
            zinv = _zinv(specs, z)
            schur = ws.schur(x, zinv)
            if nf:
                # Indefinite KKT system [[M, -F], [F^T, 0]]: M alone may be
                # singular when an equation touches only free columns.
                kkt = np.block(
                    [[schur, -ws.F], [ws.F.T, np.zeros((nf, nf))]]
                )
                try:
                    with np.errstate(all="ignore"):
                        lu = sla.lu_factor(kkt)
                except (sla.LinAlgError, ValueError):
                    break
                udiag = np.abs(np.diag(lu[0]))
                if udiag.min() <= 1e-15 * max(udiag.max(), 1e-300):
                    break  # KKT numerically singular; keep the best iterate

                def solve_kkt(h, rg_):
                    rhs = np.concatenate([h, rg_])
                    sol_ = sla.lu_solve(lu, rhs)
                    for _ in range(2):
                        sol_ = sol_ + sla.lu_solve(lu, rhs - kkt @ sol_)
                    if not np.all(np.isfinite(sol_)):
                        raise NumericalFailure("KKT solve produced non-finite step")
                    return sol_[:m], sol_[m:]
            else:
                ell = _factor_spd(schur)
                if ell is None:
                    break

            def newton(sigma_mu, corr):
                # M dy - F du = A(sigma*mu*Zinv + X Rd Zinv - corr Zinv) - b + F u
                # F^T dy = rg
                gmat = zinv.scaled(sigma_mu)
                gmat = gmat.plus(_mul(specs, _mul(specs, x, rd), zinv), 1.0)
                if corr is not None:
                    gmat = gmat.plus(_mul(specs, corr, zinv), -1.0)
                h = ws.op_a(gmat) - ws.b + (ws.F @ u if nf else 0.0)
                if nf:
                    dy, du = solve_kkt(h, rg)
                else:
                    du = np.zeros(0)
                    dy = _solve_refined(schur, ell, h)
                dz = ws.op_at(dy).plus(rd, -1.0)
                dx = zinv.scaled(sigma_mu).plus(x, -1.0)
                dx = dx.plus(_mul(specs, _mul(specs, x, dz), zinv), -1.0)
                if corr is not None:
                    dx = dx.plus(_mul(specs, corr, zinv), -1.0)
                dx = BlockMatrix._raw(
                    specs,
                    [
                        0.5 * (b_ + b_.T) if s.kind == "sdp" else b_
                        for s, b_ in zip(specs, dx.blocks)
                    ],
                )
                return dx, dy, dz, du

            dx_a, dy_a, dz_a, du_a = newton(0.0, None)
            ap = min(
                1.0,
                min(_max_step(s, xb, db) for s, xb, db in zip(specs, x.blocks, dx_a.blocks)),
            )
            ad = min(
                1.0,
                min(_max_step(s, zb, db) for s, zb, db in zip(specs, z.blocks, dz_a.blocks)),
            )
            mu_aff = x.plus(dx_a, ap).inner(z.plus(dz_a, ad)) / ntot
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

            corr = _mul(specs, dx_a, dz_a)
            dx, dy, dz, du = newton(sigma * mu, corr)
            ap = min(
                1.0,
                opts.step_fraction
                * min(_max_step(s, xb, db) for s, xb, db in zip(specs, x.blocks, dx.blocks)),
            )
            ad = min(
                1.0,
                opts.step_fraction
                * min(_max_step(s, zb, db) for s, zb, db in zip(specs, z.blocks, dz.blocks)),
            )
        except (NumericalFailure, FloatingPointError, ValueError):
            break
        if not (np.isfinite(ap) and np.isfinite(ad)):
            break
        if ap < 1e-12 and ad < 1e-12:
            break
        x = x.plus(dx, ap)
        u = u + ap * du
        y = y + ad * dy
        z = z.plus(dz, ad)

    _, xb_, yb_, zb_, ub_, pobj, dobj, resid, _it = best
    y_full = np.zeros(problem.n_constraints)
    y_full[red.kept] = yb_ / ws.row_scale
    u_full = np.zeros(problem.n_free)
    u_full[red.free_kept] = ub_
    out = SdpSolution(
        status=status,
        X=xb_,
        y=y_full,
        S=zb_,
        u=u_full,
        primal_objective=pobj,
        dual_objective=dobj,
        residuals={},
        iterations=it,
    )
    out.residuals = verify(problem, out)  # store what re-verification computes
    return out


def verify(problem, solution, tol=1e-12):
    """Recompute residuals of a solution from scratch (no solver state).

    Returns the residual dict; raises NumericalFailure if the stored
    residuals disagree with the recomputed ones beyond ``tol``.
    """
    if solution.X is None or solution.y is None:
        return {}
    u = solution.u if solution.u is not None else np.zeros(problem.n_free)
    av = np.array([a.inner(solution.X) for a in problem.constraints])
    if problem.n_free:
        av = av + problem.F @ u
    relp = np.linalg.norm(problem.b - av) / (1.0 + np.linalg.norm(problem.b))
    if problem.n_free:
        rg = problem.g - problem.F.T @ solution.y
        relp = max(relp, np.linalg.norm(rg) / (1.0 + np.linalg.norm(problem.g)))
    aty = BlockMatrix.zeros(problem.specs)
    for yi, a in zip(solution.y, problem.constraints):
        if yi != 0.0:
            aty = aty.plus(a, yi)
    rd = problem.C.plus(aty, -1.0).plus(solution.S, 1.0)
    reld = rd.norm() / (1.0 + problem.C.norm())
    pobj = problem.C.inner(solution.X) + float(problem.g @ u)
    dobj = float(problem.b @ solution.y)
    relg = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    recomputed = {"primal": relp, "dual": reld, "gap": relg}
    for key, val in recomputed.items():
        stored = solution.residuals.get(key)
        if stored is not None and abs(stored - val) > tol * (1.0 + abs(val)):
            raise NumericalFailure(
                f"stored residual {key}={stored} disagrees with recomputed {val}"
            )
    return recomputed


# ---------------------------------------------------------------------------
# LMI-form front end: maximize g @ v s.t. F0 + sum_i v_i F_i >= 0 blockwise,
# plus scalar rows r0 + R v >= 0.  Compiles onto the dual side of the
# standard form above.
# ---------------------------------------------------------------------------


class LmiProblem:
    """Linear-matrix-inequality feasibility/optimization in natural form."""

    def __init__(self, n_vars):
        self.n_vars = n_vars
        self.matrix_blocks = []  # (F0, [F_i]) with F_i possibly None
        self.rows = []  # (r0, coeff-vector)
        self.objective = np.zeros(n_vars)

    def add_matrix_block(self, f0, coeffs):
        f0 = np.asarray(f0, dtype=float)
        mats = []
        for c in coeffs:
            mats.append(None if c is None else np.asarray(c, dtype=float))
        if len(mats) != self.n_vars:
            raise ContractViolation("one coefficient slot per variable required")
        self.matrix_blocks.append((f0, mats))

    def add_row(self, r0, coeff):
        coeff = np.asarray(coeff, dtype=float).reshape(-1)
        if coeff.shape != (self.n_vars,):
            raise ContractViolation("row coefficient length mismatch")
        self.rows.append((float(r0), coeff))

    def set_objective(self, g):
        g = np.asarray(g, dtype=float).reshape(-1)
        if g.shape != (self.n_vars,):
            raise ContractViolation("objective length mismatch")
        self.objective = g

    def compile(self):
        specs = [BlockSpec(f0.shape[0], "sdp") for f0, _ in self.matrix_blocks]
        nrows = len(self.rows)
        if nrows:
            specs.append(BlockSpec(nrows, "diag"))
        specs = tuple(specs)

        def assemble(var):
            blocks = []
            for f0, mats in self.matrix_blocks:
                m = mats[var]
                blocks.append(np.zeros(f0.shape) if m is None else m)
            if nrows:
                blocks.append(np.array([r[1][var] for r in self.rows]))
            return BlockMatrix(specs, blocks)

        c_blocks = [-f0 for f0, _ in self.matrix_blocks]
        if nrows:
            c_blocks.append(np.array([-r[0] for r in self.rows]))
        cmat = BlockMatrix(specs, c_blocks)
        cons = [assemble(i) for i in range(self.n_vars)]

        # Drop variables with linearly dependent footprints; the achievable
        # slack matrices are unchanged, so the optimum is too (the objective
        # must be consistent on the dependency, which we check).
        stacked = np.stack([a.ravel() for a in cons]) if self.n_vars else np.zeros((0, 1))
        keep = np.arange(self.n_vars)
        if self.n_vars:
            _, r, piv = sla.qr(stacked.T, mode="economic", pivoting=True)
            diag = np.abs(np.diag(r))
            rank = int(np.sum(diag > 1e-12 * max(diag[0], 1e-300))) if diag.size else 0
            keep = np.sort(piv[:rank])
            dropped = np.sort(piv[rank:])
            if dropped.size:
                vk = stacked[keep]
                gram = vk @ vk.T
                for j in dropped:
                    coeff = np.linalg.solve(gram + 1e-14 * np.eye(len(keep)), vk @ stacked[j])
                    if abs(self.objective[j] - coeff @ self.objective[keep]) > 1e-9 * (
                        1 + np.linalg.norm(self.objective)
                    ):
                        raise ContractViolation(
                            "objective weights a linearly dependent variable direction"
                        )
        problem = SdpProblem(
            specs,
            cmat,
            [cons[i] for i in keep],
            [-self.objective[i] for i in keep],
        )
        return problem, keep

    def solve(self, options=None):
        """Returns (value, v, solution); value is +/-inf for infeasible sides."""
        problem, keep = self.compile()
        sol = solve(problem, options)
        v = np.zeros(self.n_vars)
        if sol.status == STATUS_OPTIMAL:
            v[keep] = sol.y[: len(keep)]
            value = float(self.objective @ v)
            return value, v, sol
        if sol.status == STATUS_PRIMAL_INFEASIBLE:
            # Standard-form primal infeasible = LMI objective unbounded above.
            return np.inf, v, sol
        if sol.status == STATUS_DUAL_INFEASIBLE:
            return -np.inf, v, sol
        return np.nan, v, sol


# ---------------------------------------------------------------------------
# SDPA sparse format
# ---------------------------------------------------------------------------


def _fmt(v):
    return f"{v:.16e}"


def split_free_variables(problem):
    """Equivalent problem with free scalars split into a nonnegative pair.

    Used for SDPA export, which has no free-variable concept.  Free scalar i
    becomes entries 2i (positive part) and 2i + 1 (negative part) of a
    trailing diagonal block.
    """
    if problem.n_free == 0:
        return problem
    nf = problem.n_free
    specs = problem.specs + (BlockSpec(2 * nf, "diag"),)
    interleave = np.zeros(2 * nf)

    def extend(mat, row):
        vec = np.zeros(2 * nf)
        vec[0::2] = row
        vec[1::2] = -row
        return BlockMatrix(specs, list(mat.blocks) + [vec])

    cmat = extend(problem.C, problem.g)
    cons = [extend(a, problem.F[i]) for i, a in enumerate(problem.constraints)]
    del interleave
    return SdpProblem(specs, cmat, cons, problem.b, labels=problem.labels)


def export_sdpa(problem, path=None):
    """Write SDPA sparse format.

    Layout: #constraints; #blocks; block sizes (diag negative); rhs vector;
    then "matno blkno i j value" entries with 1-based indices, i <= j, and
    matno 0 holding the objective.  Deterministic bytes for a fixed problem.
    Free scalars are split into a trailing diagonal block first.
    """
    problem = split_free_variables(problem)
    buf = io.StringIO()
    m = problem.n_constraints
    buf.write(f"{m}\n")
    buf.write(f"{len(problem.specs)}\n")
    buf.write(
        " ".join(
            str(s.size if s.kind == "sdp" else -s.size) for s in problem.specs
        )
        + "\n"
    )
    buf.write(" ".join(_fmt(v) for v in problem.b) + "\n")

    def emit(matno, mat):
        for blkno, (spec, blk) in enumerate(zip(problem.specs, mat.blocks), start=1):
            if spec.kind == "sdp":
                for i in range(spec.size):
                    for j in range(i, spec.size):
                        v = blk[i, j]
                        if v != 0.0:
                            buf.write(f"{matno} {blkno} {i + 1} {j + 1} {_fmt(v)}\n")
            else:
                for i in range(spec.size):
                    v = blk[i]
                    if v != 0.0:
                        buf.write(f"{matno} {blkno} {i + 1} {i + 1} {_fmt(v)}\n")

    emit(0, problem.C)
    for idx, a in enumerate(problem.constraints, start=1):
        emit(idx, a)
    data = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(data)
    return data


def import_sdpa(path):
    """Inverse of :func:`export_sdpa` on its image; tolerates comment lines
    beginning with '"' or '*'."""
    if hasattr(path, "read"):
        lines = path.read().splitlines()
    else:
        with open(path) as fh:
            lines = fh.read().splitlines()

    def clean(seq):
        for lineno, raw in enumerate(seq, start=1):
            stripped = raw.strip()
            if not stripped or stripped[0] in "\"*":
                continue
            yield lineno, stripped

    stream = clean(lines)

    def next_line(what):
        try:
            return next(stream)
        except StopIteration:
            raise ContractViolation(f"SDPA file truncated: expected {what}")

    def parse_ints(text, lineno, what):
        try:
            return [int(t) for t in text.replace(",", " ").split()]
        except ValueError:
            raise ContractViolation(f"line {lineno}: cannot parse {what}: {text!r}")

    lineno, text = next_line("constraint count")
    vals = parse_ints(text, lineno, "constraint count")
    if len(vals) != 1:
        raise ContractViolation(f"line {lineno}: expected a single integer")
    m = vals[0]
    lineno, text = next_line("block count")
    nblocks = parse_ints(text, lineno, "block count")[0]
    lineno, text = next_line("block structure")
    sizes = parse_ints(
        text.replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " "),
        lineno,
        "block structure",
    )
    if len(sizes) != nblocks:
        raise ContractViolation(f"line {lineno}: expected {nblocks} block sizes")
    specs = tuple(
        BlockSpec(abs(s), "sdp" if s > 0 else "diag") for s in sizes
    )
    lineno, text = next_line("rhs vector")
    try:
        rhs = [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ContractViolation(f"line {lineno}: cannot parse rhs vector")
    if len(rhs) != m:
        raise ContractViolation(f"line {lineno}: expected {m} rhs entries")

    mats = [BlockMatrix.zeros(specs) for _ in range(m + 1)]
    for lineno, text in stream:
        parts = text.replace(",", " ").split()
        if len(parts) != 5:
            raise ContractViolation(f"line {lineno}: expected 5 fields")
        try:
            matno, blkno, i, j = (int(p) for p in parts[:4])
            value = float(parts[4])
        except ValueError:
            raise ContractViolation(f"line {lineno}: cannot parse entry")
        if not (0 <= matno <= m and 1 <= blkno <= nblocks):
            raise ContractViolation(f"line {lineno}: index out of range")
        spec = specs[blkno - 1]
        if not (1 <= i <= spec.size and 1 <= j <= spec.size):
            raise ContractViolation(f"line {lineno}: entry position out of range")
        blk = mats[matno].blocks[blkno - 1]
        if spec.kind == "sdp":
            blk[i - 1, j - 1] = value
            blk[j - 1, i - 1] = value
        else:
            if i != j:
                raise ContractViolation(f"line {lineno}: off-diagonal in diag block")
            blk[i - 1] = value
    return SdpProblem(specs, mats[0], mats[1:], rhs)
