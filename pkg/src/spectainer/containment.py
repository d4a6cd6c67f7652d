"""Containment verdicts for projections of polyhedra and spectrahedra.

Each decision method returns a :class:`Verdict`.  The tri-state semantics
are strict: methods that are only sufficient (the solitary criterion, any
finite relaxation order) never report NotContained; NotContained always
carries a witness point validated by direct evaluation, and Contained /
ContainedInClosure always carry a certificate that passed an independent
re-verification.  Closure subtleties of projected outer sets are surfaced
in the status, never collapsed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import pencil as pen
from . import sdp, sos, symcore
from .errors import CertificateInvalid, ContractViolation, SolverStalled

CONTAINED = "Contained"
CONTAINED_IN_CLOSURE = "ContainedInClosure"
NOT_CONTAINED = "NotContained"
UNKNOWN = "Unknown"

VIOLATION_TOL = 1e-7
MEMBERSHIP_TOL = 1e-6


@dataclass
class Witness:
    """Point of the inner set violating the outer description."""

    x: np.ndarray
    y: np.ndarray | None = None  # inner lift
    z: np.ndarray | None = None  # simplex-slice point (polyhedral methods)
    Z: np.ndarray | None = None  # spectraplex-slice point (spectrahedral methods)
    violation: float = 0.0

    def to_json_dict(self):
        out = {"x": np.asarray(self.x).tolist(), "violation": self.violation}
        if self.y is not None:
            out["y"] = np.asarray(self.y).tolist()
        if self.z is not None:
            out["z"] = np.asarray(self.z).tolist()
        if self.Z is not None:
            out["Z"] = np.asarray(self.Z).tolist()
        return out


@dataclass
class Verdict:
    status: str
    method: str
    order: int | None = None
    mu: float | None = None
    certificate: dict | None = None
    witness: Witness | None = None
    residuals: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    mu_sequence: list = field(default_factory=list)
    wall_time_ms: float = 0.0

    def to_json_dict(self):
        out = {
            "status": self.status,
            "method": self.method,
            "order": self.order,
            "mu": self.mu,
            "residuals": self.residuals,
            "wall_time_ms": self.wall_time_ms,
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.witness is not None:
            out["witness"] = self.witness.to_json_dict()
        if self.mu_sequence:
            out["mu_sequence"] = self.mu_sequence
        if self.messages:
            out["messages"] = list(self.messages)
        return out


def _timed(verdict, t0):
    verdict.wall_time_ms = 1000.0 * (time.perf_counter() - t0)
    return verdict


# ---------------------------------------------------------------------------
# Point membership
# ---------------------------------------------------------------------------


def membership(pencil_in, x, tol=VIOLATION_TOL):
    """True iff x lies in the projected spectrahedron (margin SDP over the
    lift when projection variables are present)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (pencil_in.d,):
        raise ContractViolation("point dimension mismatch")
    if pencil_in.m == 0:
        return symcore.is_psd(pencil_in.evaluate(x), tol)
    margin, _, _ = pen.feasibility_margin(pencil_in, x=x)
    return margin >= -tol


def membership_lift(pencil_in, x):
    """Best lift y for x, with the attained margin."""
    if pencil_in.m == 0:
        val = symcore.min_eigval(pencil_in.evaluate(x))
        return val, np.zeros(0)
    margin, _, y = pen.feasibility_margin(pencil_in, x=x)
    return margin, y


# ---------------------------------------------------------------------------
# Exact LP criterion for projected-polyhedron-in-polyhedron
# ---------------------------------------------------------------------------


def lp_containment(inner, outer, allow_c0=True, tol=sdp.FEAS_TOL):
    """Exact criterion for pi(P_inner) in P_outer via a nonnegative factor
    matrix: outer rows must be nonnegative row combinations of inner rows
    (plus a nonnegative offset when allow_c0).

    Infeasibility of the linear system disproves containment; a witness is
    recovered by minimizing each outer row over the inner polyhedron.
    allow_c0=False additionally requires the caller to have checked that the
    inner set is a polytope and not a singleton.
    """
    t0 = time.perf_counter()
    if outer.m != 0:
        raise ContractViolation("outer polyhedron must not be projected")
    if inner.d != outer.d:
        raise ContractViolation("dimension mismatch")
    inner_pencil = pen.polyhedron_to_normal_form(inner)
    margin, x0, y0 = pen.feasibility_margin(inner_pencil)
    if margin < -tol:
        raise ContractViolation("inner polyhedron is empty")

    k, l, d, m = inner.k, outer.k, inner.d, inner.m
    ncols = l * k + (l if allow_c0 else 0)
    rows = []
    rhs = []
    labels = []
    # b_i = c0_i + C_i. @ a ; B_ip = C_i. @ A_.p ; 0 = C_i. @ A'_.q
    for i in range(l):
        row = np.zeros(ncols)
        row[i * k : (i + 1) * k] = inner.a
        if allow_c0:
            row[l * k + i] = 1.0
        rows.append(row)
        rhs.append(outer.a[i])
        labels.append(f"offset:{i}")
    for i in range(l):
        for p in range(d):
            row = np.zeros(ncols)
            row[i * k : (i + 1) * k] = inner.A[:, p]
            rows.append(row)
            rhs.append(outer.A[i, p])
            labels.append(f"linear:{i},{p}")
    for i in range(l):
        for q in range(m):
            row = np.zeros(ncols)
            row[i * k : (i + 1) * k] = inner.Aprime[:, q]
            rows.append(row)
            rhs.append(0.0)
            labels.append(f"projection:{i},{q}")

    specs = (sdp.BlockSpec(ncols, "diag"), sdp.BlockSpec(1, "diag"))
    mrows = len(rows)
    shift = [np.array(r) @ np.ones(ncols) for r in rows]
    cons = [
        sdp.BlockMatrix(specs, [rows[i], np.zeros(1)]) for i in range(mrows)
    ]
    fmat = np.array(shift + [1.0]).reshape(-1, 1)
    cons.append(sdp.BlockMatrix(specs, [np.zeros(ncols), np.ones(1)]))  # t + s = 1
    rhs.append(1.0)
    labels.append("cap")
    problem = sdp.SdpProblem(
        specs,
        sdp.BlockMatrix.zeros(specs),
        cons,
        rhs,
        labels=labels,
        free_coeffs=fmat,
        free_obj=np.ones(1),
    )
    sol = sdp.solve(problem)
    verdict = Verdict(UNKNOWN, "lp", order=0)

    if sol.status == sdp.STATUS_OPTIMAL and sol.u[0] >= -tol:
        t_star = float(sol.u[0])
        flat = sol.X.blocks[0] + max(t_star, 0.0)
        cmat = flat[: l * k].reshape(l, k)
        c0 = flat[l * k :] if allow_c0 else np.zeros(l)
        res = max(
            float(np.max(np.abs(outer.a - c0 - cmat @ inner.a))),
            float(np.max(np.abs(outer.A - cmat @ inner.A))) if d else 0.0,
            float(np.max(np.abs(cmat @ inner.Aprime))) if m else 0.0,
        )
        if res > 1e-6 * (1.0 + np.max(np.abs(outer.a)) + np.max(np.abs(outer.A))):
            raise CertificateInvalid(f"factor-matrix residual {res:.3e} too large")
        verdict.status = CONTAINED
        verdict.mu = t_star
        verdict.certificate = {
            "C": cmat.tolist(),
            "c0": c0.tolist(),
            "residual": res,
        }
        verdict.residuals = {"linear_system": res}
        return _timed(verdict, t0)

    infeasible = sol.status == sdp.STATUS_PRIMAL_INFEASIBLE or (
        sol.status == sdp.STATUS_OPTIMAL and sol.u[0] < -tol
    )
    if not infeasible:
        verdict.messages.append(f"solver status {sol.status}")
        return _timed(verdict, t0)
    verdict.messages.append("linear system infeasible")

    # Exact criterion: infeasible => not contained.  Find the violated row.
    witness = _polyhedron_row_witness(inner, outer, x0)
    verdict.status = NOT_CONTAINED
    if witness is not None:
        verdict.witness = witness
    else:
        verdict.messages.append(
            "linear system infeasible but no separating row found at tolerance"
        )
        verdict.status = UNKNOWN
    return _timed(verdict, t0)


def _polyhedron_row_witness(inner, outer, anchor):
    """Minimize each outer row over the inner polyhedron; first row dipping
    below -VIOLATION_TOL yields a validated witness."""
    best = None
    for i in range(outer.k):
        c = outer.A[i]
        nv = inner.d + inner.m
        lmi = sdp.LmiProblem(nv)
        coeffs = np.hstack([inner.A, inner.Aprime]) if inner.m else inner.A
        for r in range(inner.k):
            lmi.add_row(inner.a[r], coeffs[r])
        floor = np.zeros(nv)
        floor[: inner.d] = c
        lmi.add_row(outer.a[i] + 1.0, floor)  # keep the LP bounded
        obj = np.zeros(nv)
        obj[: inner.d] = -c
        lmi.set_objective(obj)
        try:
            value, v, _ = lmi.solve()
        except SolverStalled:
            continue
        if not np.isfinite(value):
            continue
        row_val = outer.a[i] - value  # a_i + min c @ x
        if row_val <= -VIOLATION_TOL:
            x = v[: inner.d]
            y = v[inner.d :]
            if np.min(inner.rows_at(x, y)) >= -MEMBERSHIP_TOL:
                cand = Witness(x=x, y=y, violation=float(row_val))
                if best is None or cand.violation < best.violation:
                    best = cand
    return best


# ---------------------------------------------------------------------------
# Solitary criterion (order-0 projected module, flat form)
# ---------------------------------------------------------------------------


def solitary_system(inner, outer):
    """Margin SDP for the order-0 sufficient criterion in its flat blocking:
    outer coefficients as blockwise-weighted sums of a psd factor matrix.

    Variables: C (k*l x k*l psd, k x k grid of l x l blocks), C0 (l x l psd),
    and the margin mu; constraints match the outer coefficients entrywise.
    """
    if outer.m != 0:
        raise ContractViolation("outer pencil must not have projected variables")
    if inner.d != outer.d:
        raise ContractViolation("inner and outer pencils must share d")
    k, l = inner.k, outer.k
    specs = (sdp.BlockSpec(k * l, "sdp"), sdp.BlockSpec(l, "sdp"))
    cons = []
    rhs = []
    fcol = []
    labels = []

    def euv(u, v):
        e = np.zeros((l, l))
        e[u, v] = 0.5
        e[v, u] += 0.5
        return e

    for u in range(l):
        for v in range(u, l):
            base = euv(u, v)
            cons.append(
                sdp.BlockMatrix(specs, [np.kron(inner.a0, base), base])
            )
            rhs.append(outer.a0[u, v])
            fcol.append(1.0 if u == v else 0.0)
            labels.append(f"const:{u},{v}")
    for p in range(inner.d):
        for u in range(l):
            for v in range(u, l):
                cons.append(
                    sdp.BlockMatrix(
                        specs, [np.kron(inner.ax[p], euv(u, v)), np.zeros((l, l))]
                    )
                )
                rhs.append(outer.ax[p][u, v])
                fcol.append(0.0)
                labels.append(f"linear:{p},{u},{v}")
    for q in range(inner.m):
        for u in range(l):
            for v in range(u, l):
                cons.append(
                    sdp.BlockMatrix(
                        specs, [np.kron(inner.ay[q], euv(u, v)), np.zeros((l, l))]
                    )
                )
                rhs.append(0.0)
                fcol.append(0.0)
                labels.append(f"projection:{q},{u},{v}")
    return sdp.SdpProblem(
        specs,
        sdp.BlockMatrix.zeros(specs),
        cons,
        rhs,
        labels=labels,
        free_coeffs=np.array(fcol).reshape(-1, 1),
        free_obj=np.ones(1),
    )


def solitary_residual(inner, outer, cmat, c0, mu=0.0):
    """Independent residual of the order-0 linear system for a candidate
    (C, C0, mu): max-norm misfit over all coefficient equations."""
    k, l = inner.k, outer.k
    blocks = cmat.reshape(k, l, k, l)

    def weighted(coeff):
        return np.einsum("ij,iujv->uv", coeff, blocks)

    worst = float(np.max(np.abs(outer.a0 - mu * np.eye(l) - c0 - weighted(inner.a0))))
    for p in range(inner.d):
        worst = max(worst, float(np.max(np.abs(outer.ax[p] - weighted(inner.ax[p])))))
    for q in range(inner.m):
        worst = max(worst, float(np.max(np.abs(weighted(inner.ay[q])))))
    return worst


def solitary_criterion(inner, outer, tol=sdp.FEAS_TOL, exact=False):
    """Single-SDP sufficient criterion for projected-spectrahedron-in-
    spectrahedron containment.

    Feasibility certifies containment; infeasibility alone is inconclusive
    (the criterion is not necessary in general), so the verdict falls back
    to Unknown unless ``exact`` is set by a caller that has established
    exactness (diagonalizable outer coefficients).
    """
    t0 = time.perf_counter()
    problem = solitary_system(inner, outer)
    sol = sdp.solve(problem)
    verdict = Verdict(UNKNOWN, "solitary", order=0)
    scale = 1.0 + max(
        np.max(np.abs(outer.a0)),
        max((np.max(np.abs(m_)) for m_ in outer.ax), default=0.0),
    )
    if sol.status in (sdp.STATUS_OPTIMAL, sdp.STATUS_STALLED) and sol.u is not None:
        mu = float(sol.u[0])
        verdict.mu = mu
        if mu >= -tol:
            # accept on the strength of the independent residual check alone
            cmat = np.array(sol.X.blocks[0])
            c0 = np.array(sol.X.blocks[1]) + max(mu, 0.0) * np.eye(outer.k)
            res = solitary_residual(inner, outer, cmat, c0, mu=min(mu, 0.0))
            if res <= 1e-6 * scale:
                verdict.status = CONTAINED
                verdict.certificate = {
                    "C": cmat.tolist(),
                    "C0": c0.tolist(),
                    "mu": mu,
                    "residual": res,
                }
                verdict.residuals = {"linear_system": res}
                return _timed(verdict, t0)
            verdict.messages.append(f"candidate residual {res:.3e} too large")
            if sol.status == sdp.STATUS_OPTIMAL:
                raise CertificateInvalid(f"solitary residual {res:.3e} too large")
            return _timed(verdict, t0)
    infeasible = sol.status == sdp.STATUS_PRIMAL_INFEASIBLE or (
        sol.status in (sdp.STATUS_OPTIMAL, sdp.STATUS_STALLED)
        and sol.u is not None
        and float(sol.u[0]) < -tol
        and sol.residuals.get("dual", 1.0) <= 1e-6
        and sol.dual_objective < -tol
    )
    if not infeasible:
        verdict.messages.append(f"solver status {sol.status}")
        return _timed(verdict, t0)
    verdict.messages.append("order-0 system infeasible")
    if exact:
        verdict.status = NOT_CONTAINED
    return _timed(verdict, t0)


# ---------------------------------------------------------------------------
# Truncated-module hierarchy
# ---------------------------------------------------------------------------


def hierarchy(inner, outer, t_max=2, mode="projected", tol=sdp.FEAS_TOL,
              require_strict=True):
    """Run the membership relaxation for t = 0..t_max and report the first
    certified order.

    mode "projected" eliminates the projection variables through
    orthogonality side conditions; "plain" keeps them as multiplier
    variables (the baseline formulation).  The inner pencil must be strictly
    feasible for the projected completeness statement to apply; boundedness
    of the projection is asserted by the caller.
    """
    t0 = time.perf_counter()
    if mode not in ("projected", "plain"):
        raise ContractViolation(f"unknown hierarchy mode {mode!r}")
    verdict = Verdict(UNKNOWN, "hierarchy" if mode == "projected" else "hierarchy-plain")
    if require_strict and not pen.is_strictly_feasible(inner):
        verdict.messages.append("inner pencil is not strictly feasible")
        return _timed(verdict, t0)
    build = (
        sos.build_projected_module_membership
        if mode == "projected"
        else sos.build_plain_module_membership
    )
    for t in range(t_max + 1):
        prog = build(inner, outer, t)
        sol = prog.solve()
        if sol.status not in (sdp.STATUS_OPTIMAL, sdp.STATUS_STALLED):
            verdict.messages.append(f"order {t}: solver {sol.status}")
            verdict.mu_sequence.append(None)
            continue
        mu = prog.mu_value(sol)
        verdict.mu_sequence.append(mu)
        if sol.status == sdp.STATUS_STALLED:
            verdict.messages.append(f"order {t}: solver stalled (mu={mu:.3e})")
        if mu >= -tol:
            try:
                cert = sos.extract_certificate(prog, sol, t)
            except CertificateInvalid as exc:
                verdict.messages.append(f"order {t}: {exc}")
                continue
            verdict.status = CONTAINED
            verdict.order = t
            verdict.mu = mu
            verdict.certificate = cert.to_json_dict()
            verdict.residuals = {"certificate": cert.residual}
            return _timed(verdict, t0)
    verdict.mu = next(
        (m for m in reversed(verdict.mu_sequence) if m is not None), None
    )
    verdict.messages.append("no certificate up to requested order")
    return _timed(verdict, t0)


# ---------------------------------------------------------------------------
# Exact order-0 decision for diagonalizable outer pencils
# ---------------------------------------------------------------------------


def diagonalizing_congruence(mats, tol=1e-9):
    """Invertible U with U^T M U diagonal for every M, or raise.

    Exactly diagonal input is accepted as-is.  Otherwise a positive-definite
    member of the family is required for whitening, after which the family
    must commute and share an eigenbasis.
    """
    mats = [symcore.symmetrize(m) for m in mats]
    n = mats[0].shape[0]
    if all(np.max(np.abs(m - np.diag(np.diag(m)))) <= tol for m in mats):
        return np.eye(n)
    # Search a pd combination: the constant term first, then mixtures.
    combos = [np.eye(len(mats))[0]]
    combos += [np.ones(len(mats)) / len(mats)]
    whitener = None
    for w in combos:
        cand = sum(wi * m for wi, m in zip(w, mats))
        vals = symcore.sym_eigvals(cand)
        if vals[0] > 1e-8 * (1 + vals[-1]):
            whitener = cand
            break
    if whitener is None:
        raise ContractViolation(
            "cannot verify simultaneous diagonalizability: "
            "no positive-definite member found"
        )
    ell = np.linalg.cholesky(whitener)
    inv = np.linalg.inv(ell)
    white = [inv @ m @ inv.T for m in mats]
    scale = max(np.linalg.norm(m) for m in white) + 1.0
    for i in range(len(white)):
        for j in range(i + 1, len(white)):
            comm = white[i] @ white[j] - white[j] @ white[i]
            if np.linalg.norm(comm) > 1e-7 * scale:
                raise ContractViolation(
                    "coefficients are not simultaneously diagonalizable "
                    f"(commutator norm {np.linalg.norm(comm):.2e})"
                )
    weights = np.array([1.0 / (2 + 3 * i) for i in range(len(white))])
    _, q = symcore.sym_eig(sum(wi * m for wi, m in zip(weights, white)))
    u = inv.T @ q
    for m in mats:
        d = u.T @ m @ u
        if np.max(np.abs(d - np.diag(np.diag(d)))) > 1e-6 * (1 + np.max(np.abs(d))):
            raise ContractViolation("joint diagonalization failed verification")
    return u


def pis_in_h_exact(inner, outer, tol=sdp.FEAS_TOL):
    """Order-0 decision, exact when the outer coefficients are simultaneously
    congruent to diagonal matrices (in particular for polyhedra in normal
    form): infeasibility disproves containment and yields a witness by
    minimizing the violated diagonal row over the inner projection."""
    t0 = time.perf_counter()
    u = diagonalizing_congruence([outer.a0] + list(outer.ax))
    outer_diag = pen.LinearPencil(
        u.T @ outer.a0 @ u, [u.T @ m @ u for m in outer.ax], ()
    )
    verdict = solitary_criterion(inner, outer_diag, tol=tol, exact=True)
    verdict.method = "pis-in-h-exact"
    t1 = time.perf_counter()
    if verdict.status == NOT_CONTAINED:
        witness = _diag_row_witness(inner, outer_diag)
        if witness is None:
            verdict.status = UNKNOWN
            verdict.messages.append(
                "system infeasible but no violated row found at tolerance"
            )
        else:
            verdict.witness = witness
            # report violation against the original pencil
            witness.violation = float(
                symcore.min_eigval(outer.evaluate(witness.x))
            )
    verdict.wall_time_ms += 1000.0 * (time.perf_counter() - t1)
    return verdict


def _diag_row_witness(inner, outer_diag):
    best = None
    l = outer_diag.k
    for q in range(l):
        c = np.array([m[q, q] for m in outer_diag.ax])
        c0 = outer_diag.a0[q, q]
        try:
            value, x, y, capped = pen.linear_max(inner, -c)
        except SolverStalled:
            continue
        row_val = c0 - value  # c0 + min c @ x
        if row_val <= -VIOLATION_TOL and not capped:
            margin, ylift = membership_lift(inner, x)
            if margin >= -MEMBERSHIP_TOL:
                cand = Witness(x=x, y=ylift, violation=float(row_val))
                if best is None or cand.violation < best.violation:
                    best = cand
    return best


# ---------------------------------------------------------------------------
# Bilinear criteria for projected outer sets
# ---------------------------------------------------------------------------


def spectraplex_face(ay_mats, size, tol=sdp.FEAS_TOL):
    """Column space annihilated by every feasible slice point.

    Iterated facial reduction of {Z psd, tr Z = 1, <Ay_q, Z> = 0}: each
    round finds a nonzero psd element of span(Ay) restricted to the current
    face; its range is orthogonal to every slice point, so Z u = 0 holds
    across the slice for each of its eigenvectors u.  Returns the (size x r)
    matrix of such directions (r = 0 when no reduction applies).
    """
    killed = np.zeros((size, 0))
    basis = np.eye(size)
    for _ in range(size):
        if basis.shape[1] == 0:
            break
        reduced = [basis.T @ m @ basis for m in ay_mats]
        w = pen.span_psd_witness(reduced, tol=tol)
        if w is None:
            break
        vals, vecs = symcore.sym_eig(w)
        new = vecs[:, vals > 1e-7 * (1 + vals[-1])]
        if new.shape[1] == 0:
            break
        killed = np.hstack([killed, basis @ new])
        # re-orthonormalize the remaining face
        basis = symcore.nullspace_basis(killed.T, 1e-12)
    return killed


def _triangle_slots(l, offset):
    slots = {}
    idx = offset
    for i in range(l):
        for j in range(i, l):
            slots[(i, j)] = idx
            idx += 1
    return slots, idx


def build_ps_ps_domain(inner, outer, arch_bound=None):
    """Bilinear domain for the spectraplex-slice criterion.

    Variables: retained x, the inner lift y, and the upper triangle of the
    slice matrix Z.  The domain includes the product constraint
    inner-pencil (x) slice-matrix >= 0 (valid since both factors are psd),
    which is what lets low relaxation orders certify tight containments.
    Returns (domain, objective, slots, face).
    """
    d, mA, l = inner.d, inner.m, outer.k
    slots, nv = _triangle_slots(l, d + mA)
    names = (
        [f"x{i+1}" for i in range(d)]
        + [f"y{q+1}" for q in range(mA)]
        + [f"Z{i+1}{j+1}" for i in range(l) for j in range(i, l)]
    )
    domain = sos.BilinearDomain(nv, var_names=tuple(names))
    x_slots = list(range(d))
    y_slots = list(range(d, d + mA))
    inner_poly = sos.pencil_to_matpoly(inner, nv, x_slots, y_slots)
    zpoly = sos.sym_matrix_var(l, nv, slots)
    domain.matrix_ineqs.append(("inner", inner_poly))
    domain.matrix_ineqs.append(("slice", zpoly))
    domain.matrix_ineqs.append(("inner_x_slice", sos.matpoly_kron(inner_poly, zpoly)))
    # ||Z||_F <= tr Z = 1 on the slice
    ball = {(0,) * nv: 1.0}
    for (i, j), s in slots.items():
        e = [0] * nv
        e[s] = 2
        ball[tuple(e)] = -1.0 if i == j else -2.0
    domain.scalar_ineqs.append(("slice_ball", ball))
    if arch_bound is not None:
        sos.add_archimedean_ball(domain, arch_bound, range(d + mA), name="xy_ball")

    def zslot_poly(coeff):
        out = {}
        for i in range(l):
            for j in range(i, l):
                w = coeff[i, j] * (1.0 if i == j else 2.0)
                if w != 0.0:
                    e = [0] * nv
                    e[slots[(i, j)]] = 1
                    out[tuple(e)] = w
        return out

    domain.equalities.append(("trace", sos.poly_add(zslot_poly(np.eye(l)), {(0,) * nv: -1.0})))
    for qi, bq in enumerate(outer.ay):
        domain.equalities.append((f"orth{qi}", zslot_poly(symcore.symmetrize(bq))))
    face = spectraplex_face(outer.ay, l)
    for col in range(face.shape[1]):
        uvec = face[:, col]
        for i in range(l):
            coeff = np.zeros((l, l))
            coeff[i] += 0.5 * uvec
            coeff[:, i] += 0.5 * uvec
            poly = zslot_poly(coeff)
            if poly:
                domain.equalities.append((f"face{col}_{i}", poly))

    outer_x = sos.pencil_to_matpoly(
        pen.LinearPencil(outer.a0, outer.ax, ()), nv, x_slots
    )
    objective = sos.matpoly_frobenius(outer_x, zpoly)
    return domain, objective, slots, face


def bilinear_ps_ps(inner, outer, t=1, t_max=None, arch_bound=None, seed=0,
                   tol=sdp.FEAS_TOL):
    """Bilinear spectraplex criterion for projected-in-projected containment.

    Nonnegativity of <outer(x, 0), Z> over (inner projection) x (slice of
    the spectraplex) decides containment in the closure of the outer
    projection; when the outer projection coefficients satisfy the
    constraint qualification (a psd combination must vanish) the closure is
    dropped.  A negative relaxation value triggers witness extraction.
    """
    t0 = time.perf_counter()
    if outer.m < 1:
        raise ContractViolation("outer pencil must be projected (m >= 1)")
    if inner.d != outer.d:
        raise ContractViolation("dimension mismatch")
    verdict = Verdict(UNKNOWN, "bilinear")
    margin, x_anchor, _ = pen.feasibility_margin(inner)
    if margin < -tol:
        verdict.status = CONTAINED
        verdict.messages.append("inner set is empty; containment is vacuous")
        return _timed(verdict, t0)
    cq, cq_witness = pen.outer_projection_cq(outer)
    if cq == pen.CQ_WHOLE_SPACE:
        verdict.status = CONTAINED
        verdict.messages.append("outer projection is all of R^d")
        verdict.certificate = {"whole_space": True}
        return _timed(verdict, t0)
    contained_status = CONTAINED if cq == pen.CQ_HOLDS else CONTAINED_IN_CLOSURE
    if cq == pen.CQ_FAILS:
        verdict.messages.append(
            "constraint qualification fails: certificates give closure containment"
        )

    domain, objective, slots, face = build_ps_ps_domain(inner, outer, arch_bound)
    t_hi = t if t_max is None else t_max
    moment_seed = None
    for order in range(t, t_hi + 1):
        prog = sos.build_bilinear_relaxation(domain, objective, order)
        sol = prog.solve()
        if sol.status not in (sdp.STATUS_OPTIMAL, sdp.STATUS_STALLED):
            verdict.messages.append(f"order {order}: solver {sol.status}")
            verdict.mu_sequence.append(None)
            continue
        mu = prog.mu_value(sol)
        verdict.mu_sequence.append(mu)
        verdict.mu = mu
        verdict.order = order
        if mu >= -tol:
            try:
                cert = sos.extract_certificate(prog, sol, order)
            except CertificateInvalid as exc:
                verdict.messages.append(f"order {order}: {exc}")
                continue
            verdict.status = contained_status
            verdict.certificate = cert.to_json_dict()
            verdict.residuals = {"certificate": cert.residual}
            return _timed(verdict, t0)
        moment_seed = prog.moment_vector(sol)

    witness = _ps_ps_witness(inner, outer, face, moment_seed, slots, seed=seed)
    if witness is not None:
        verdict.status = NOT_CONTAINED
        verdict.witness = witness
        verdict.residuals = {"witness_violation": witness.violation}
    else:
        verdict.messages.append("negative relaxation value but no validated witness")
    return _timed(verdict, t0)


def _slice_minimize(outer, x, face):
    """min <outer(x, 0), Z> over the spectraplex slice (SDP in Z)."""
    l = outer.k
    bx = pen.LinearPencil(outer.a0, outer.ax, ()).evaluate(x)
    specs = (sdp.BlockSpec(l, "sdp"),)
    cons = [sdp.BlockMatrix(specs, [np.eye(l)])]
    rhs = [1.0]
    for bq in outer.ay:
        cons.append(sdp.BlockMatrix(specs, [symcore.symmetrize(bq)]))
        rhs.append(0.0)
    for col in range(face.shape[1]):
        uvec = face[:, col]
        for i in range(l):
            coeff = np.zeros((l, l))
            coeff[i] += 0.5 * uvec
            coeff[:, i] += 0.5 * uvec
            if np.any(coeff):
                cons.append(sdp.BlockMatrix(specs, [coeff]))
                rhs.append(0.0)
    problem = sdp.SdpProblem(
        specs, sdp.BlockMatrix(specs, [-bx]), cons, rhs
    )
    sol = sdp.solve(problem)
    if sol.status != sdp.STATUS_OPTIMAL:
        return None, None
    z = np.array(sol.X.blocks[0])
    return float(np.sum(bx * z)), z


def _ps_ps_witness(inner, outer, face, moment_seed, slots, seed=0, rounds=3):
    d = inner.d
    seeds = []
    if moment_seed is not None:
        xm = np.zeros(d)
        for p in range(d):
            e = [0] * (len(next(iter(moment_seed))))
            e[p] = 1
            xm[p] = moment_seed.get(tuple(e), 0.0)
        seeds.append(xm)
    rng = np.random.default_rng(seed)
    dirs = [np.eye(d)[i] * s for i in range(d) for s in (1.0, -1.0)]
    dirs += [rng.normal(size=d) for _ in range(4)]
    for c in dirs:
        c = c / max(np.linalg.norm(c), 1e-12)
        try:
            _, x, _, capped = pen.linear_max(inner, c)
        except SolverStalled:
            continue
        if not capped:
            seeds.append(x)
    best = None
    for x in seeds:
        x = np.asarray(x, dtype=float)
        for _ in range(rounds):
            margin, _ = membership_lift(inner, x)
            if margin < -MEMBERSHIP_TOL:
                break
            val, z = _slice_minimize(outer, x, face)
            if val is None:
                break
            if best is None or val < best[0]:
                best = (val, x.copy(), z)
            # linear step in x against the current slice point
            c = np.array([np.sum(symcore.symmetrize(bp) * z) for bp in outer.ax])
            if np.linalg.norm(c) < 1e-12:
                break
            try:
                _, x_new, _, capped = pen.linear_max(inner, -c)
            except SolverStalled:
                break
            if capped or np.allclose(x_new, x, atol=1e-10):
                break
            x = x_new
    if best is None or best[0] > -VIOLATION_TOL:
        return None
    val, x, z = best
    margin, ylift = membership_lift(inner, x)
    if margin < -MEMBERSHIP_TOL:
        return None
    # slice validity, independent of the solver that produced z
    if abs(np.trace(z) - 1.0) > 1e-6 or not symcore.is_psd(z, 1e-7):
        return None
    if any(abs(np.sum(symcore.symmetrize(bq) * z)) > 1e-6 for bq in outer.ay):
        return None
    return Witness(x=x, y=ylift, Z=z, violation=float(val))


# -- polyhedral variant ------------------------------------------------------


def simplex_slice_face(bprime, tol=sdp.FEAS_TOL):
    """Coordinates forced to zero on {z >= 0, B'^T z = 0, 1^T z = 1}."""
    l = bprime.shape[0]
    n = bprime.shape[1]
    fixed = []
    for i in range(l):
        specs = (sdp.BlockSpec(l, "diag"),)
        cons = [sdp.BlockMatrix(specs, [np.ones(l)])]
        rhs = [1.0]
        for q in range(n):
            cons.append(sdp.BlockMatrix(specs, [bprime[:, q]]))
            rhs.append(0.0)
        cvec = np.zeros(l)
        cvec[i] = 1.0
        problem = sdp.SdpProblem(
            specs, sdp.BlockMatrix(specs, [cvec]), cons, rhs
        )
        sol = sdp.solve(problem)
        if sol.status == sdp.STATUS_OPTIMAL and sol.primal_objective <= tol:
            fixed.append(i)
    return fixed


def build_ph_ph_domain(inner, outer, arch_bound=None):
    """Bilinear domain for the kernel-simplex criterion: variables
    (x, y, z) with rowwise inner constraints, the simplex slice in z, and
    all products row_r * z_i as derived valid constraints."""
    d, mA, l = inner.d, inner.m, outer.k
    nv = d + mA + l
    names = (
        [f"x{i+1}" for i in range(d)]
        + [f"y{q+1}" for q in range(mA)]
        + [f"z{i+1}" for i in range(l)]
    )
    domain = sos.BilinearDomain(nv, var_names=tuple(names))

    def unit(i):
        e = [0] * nv
        e[i] = 1
        return tuple(e)

    zero = (0,) * nv
    rows = []
    coeffs = np.hstack([inner.A, inner.Aprime]) if inner.m else np.array(inner.A)
    for r in range(inner.k):
        poly = {zero: float(inner.a[r])}
        for c in range(d + mA):
            if coeffs[r, c] != 0.0:
                poly[unit(c)] = float(coeffs[r, c])
        rows.append(poly)
        domain.scalar_ineqs.append((f"row{r}", poly))
    for i in range(l):
        domain.scalar_ineqs.append((f"z{i}", {unit(d + mA + i): 1.0}))
    for r, rp in enumerate(rows):
        for i in range(l):
            domain.scalar_ineqs.append(
                (f"row{r}_z{i}", sos.poly_mul(rp, {unit(d + mA + i): 1.0}))
            )
    ball = {zero: 1.0}
    for i in range(l):
        e = [0] * nv
        e[d + mA + i] = 2
        ball[tuple(e)] = -1.0
    domain.scalar_ineqs.append(("z_ball", ball))
    if arch_bound is not None:
        sos.add_archimedean_ball(domain, arch_bound, range(d + mA), name="xy_ball")

    domain.equalities.append(
        ("sum", sos.poly_add({unit(d + mA + i): 1.0 for i in range(l)}, {zero: -1.0}))
    )
    for q in range(outer.m):
        poly = {}
        for i in range(l):
            if outer.Aprime[i, q] != 0.0:
                poly[unit(d + mA + i)] = float(outer.Aprime[i, q])
        domain.equalities.append((f"kernel{q}", poly))
    fixed = simplex_slice_face(outer.Aprime) if outer.m else []
    for i in fixed:
        domain.equalities.append((f"face_z{i}", {unit(d + mA + i): 1.0}))

    objective = {}
    for i in range(l):
        zi = unit(d + mA + i)
        objective[zi] = objective.get(zi, 0.0) + float(outer.a[i])
        for p in range(d):
            if outer.A[i, p] != 0.0:
                key = sos.mono_mul(zi, unit(p))
                objective[key] = objective.get(key, 0.0) + float(outer.A[i, p])
    return domain, objective, fixed


def bilinear_ph_ph(inner, outer, t=1, t_max=None, arch_bound=None, seed=0,
                   tol=sdp.FEAS_TOL):
    """Kernel-simplex criterion for projected-polyhedron containment:
    nonnegativity of z^T (outer rows at x) over the inner polyhedron times
    the kernel simplex decides containment exactly (polyhedra are closed)."""
    t0 = time.perf_counter()
    if inner.d != outer.d:
        raise ContractViolation("dimension mismatch")
    verdict = Verdict(UNKNOWN, "bilinear")
    inner_pencil = pen.polyhedron_to_normal_form(inner)
    margin, x_anchor, _ = pen.feasibility_margin(inner_pencil)
    if margin < -tol:
        verdict.status = CONTAINED
        verdict.messages.append("inner set is empty; containment is vacuous")
        return _timed(verdict, t0)
    if outer.m:
        # span(B') meets the positive orthant => outer projection is R^d
        nv = outer.m + 1
        lmi = sdp.LmiProblem(nv)
        for i in range(outer.k):
            row = np.zeros(nv)
            row[:-1] = outer.Aprime[i]
            row[-1] = -1.0
            lmi.add_row(0.0, row)
        cap = np.zeros(nv)
        cap[-1] = -1.0
        lmi.add_row(1.0, cap)
        obj = np.zeros(nv)
        obj[-1] = 1.0
        lmi.set_objective(obj)
        value, _, _ = lmi.solve()
        if np.isfinite(value) and value > tol:
            verdict.status = CONTAINED
            verdict.messages.append("outer projection is all of R^d")
            verdict.certificate = {"whole_space": True}
            return _timed(verdict, t0)

    domain, objective, fixed = build_ph_ph_domain(inner, outer, arch_bound)
    t_hi = t if t_max is None else t_max
    moment_seed = None
    for order in range(t, t_hi + 1):
        prog = sos.build_bilinear_relaxation(domain, objective, order)
        sol = prog.solve()
        if sol.status not in (sdp.STATUS_OPTIMAL, sdp.STATUS_STALLED):
            verdict.messages.append(f"order {order}: solver {sol.status}")
            verdict.mu_sequence.append(None)
            continue
        mu = prog.mu_value(sol)
        verdict.mu_sequence.append(mu)
        verdict.mu = mu
        verdict.order = order
        if mu >= -tol:
            try:
                cert = sos.extract_certificate(prog, sol, order)
            except CertificateInvalid as exc:
                verdict.messages.append(f"order {order}: {exc}")
                continue
            verdict.status = CONTAINED
            verdict.certificate = cert.to_json_dict()
            verdict.residuals = {"certificate": cert.residual}
            return _timed(verdict, t0)
        moment_seed = prog.moment_vector(sol)

    witness = _ph_ph_witness(inner, outer, moment_seed, seed=seed)
    if witness is not None:
        verdict.status = NOT_CONTAINED
        verdict.witness = witness
        verdict.residuals = {"witness_violation": witness.violation}
    else:
        verdict.messages.append("negative relaxation value but no validated witness")
    return _timed(verdict, t0)


def _simplex_minimize(outer, x):
    """min z^T (b + B x) over the kernel simplex (LP in z)."""
    l = outer.k
    vals = outer.a + outer.A @ x
    specs = (sdp.BlockSpec(l, "diag"),)
    cons = [sdp.BlockMatrix(specs, [np.ones(l)])]
    rhs = [1.0]
    for q in range(outer.m):
        cons.append(sdp.BlockMatrix(specs, [outer.Aprime[:, q]]))
        rhs.append(0.0)
    problem = sdp.SdpProblem(specs, sdp.BlockMatrix(specs, [-vals]), cons, rhs)
    sol = sdp.solve(problem)
    if sol.status != sdp.STATUS_OPTIMAL:
        return None, None
    z = np.array(sol.X.blocks[0])
    return float(vals @ z), z


def _ph_ph_witness(inner, outer, moment_seed, seed=0, rounds=3):
    d = inner.d
    inner_pencil = pen.polyhedron_to_normal_form(inner)
    seeds = []
    if moment_seed is not None:
        nv = len(next(iter(moment_seed)))
        xm = np.zeros(d)
        for p in range(d):
            e = [0] * nv
            e[p] = 1
            xm[p] = moment_seed.get(tuple(e), 0.0)
        seeds.append(xm)
    rng = np.random.default_rng(seed)
    dirs = [np.eye(d)[i] * s for i in range(d) for s in (1.0, -1.0)]
    dirs += [rng.normal(size=d) for _ in range(4)]
    for c in dirs:
        c = c / max(np.linalg.norm(c), 1e-12)
        try:
            _, x, _, capped = pen.linear_max(inner_pencil, c)
        except SolverStalled:
            continue
        if not capped:
            seeds.append(x)
    best = None
    for x in seeds:
        x = np.asarray(x, dtype=float)
        for _ in range(rounds):
            val, z = _simplex_minimize(outer, x)
            if val is None:
                break
            if best is None or val < best[0]:
                best = (val, x.copy(), z)
            c = outer.A.T @ z
            if np.linalg.norm(c) < 1e-12:
                break
            try:
                _, x_new, _, capped = pen.linear_max(inner_pencil, -c)
            except SolverStalled:
                break
            if capped or np.allclose(x_new, x, atol=1e-10):
                break
            x = x_new
    if best is None or best[0] > -VIOLATION_TOL:
        return None
    val, x, z = best
    margin, ylift = membership_lift(inner_pencil, x)
    if margin < -MEMBERSHIP_TOL:
        return None
    if np.min(z) < -1e-8 or abs(np.sum(z) - 1.0) > 1e-6:
        return None
    if outer.m and np.max(np.abs(outer.Aprime.T @ z)) > 1e-6:
        return None
    return Witness(x=x, y=ylift, z=z, violation=float(val))


# ---------------------------------------------------------------------------
# Positive-map representation
# ---------------------------------------------------------------------------


def positive_map_matrix(inner, outer, tol=sdp.FEAS_TOL):
    """Representing matrix of the extended coefficient map, assembled from a
    feasible order-0 solution (complete positivity is equivalent to the
    order-0 criterion).

    Requires the non-constant inner coefficients to be linearly independent.
    Returns (C_hat, psd_flag, verdict); C_hat is None when the order-0
    system is infeasible, in which case the map is not completely positive.
    """
    mats = list(inner.ax) + list(inner.ay)
    if mats:
        cols = np.stack([m.reshape(-1) for m in mats], axis=1)
        kernel = symcore.nullspace_basis(cols, 1e-9)
        if kernel.shape[1] > 0:
            combo = kernel[:, 0]
            terms = [
                f"x{i + 1}" if i < inner.d else f"y{i - inner.d + 1}"
                for i in np.nonzero(np.abs(combo) > 1e-8)[0]
            ]
            raise ContractViolation(
                "inner coefficients are linearly dependent "
                f"(combination over {', '.join(terms)})"
            )
    verdict = solitary_criterion(inner, outer, tol=tol)
    if verdict.status != CONTAINED:
        return None, False, verdict
    cmat = np.array(verdict.certificate["C"])
    c0 = np.array(verdict.certificate["C0"])
    l = outer.k
    chat = np.zeros((c0.shape[0] + cmat.shape[0],) * 2)
    chat[:l, :l] = c0
    chat[l:, l:] = cmat
    return chat, symcore.is_psd(chat, 1e-8), verdict


# ---------------------------------------------------------------------------
# Sampling oracle and circumradius
# ---------------------------------------------------------------------------


def sample_projection_points(inner, n_directions=64, seed=0, interior_fraction=0.25):
    """Representative points of the inner projection: extreme points along
    random directions plus random convex combinations of them."""
    inner = pen.as_pencil(inner)
    rng = np.random.default_rng(seed)
    points = []
    d = inner.d
    for _ in range(n_directions):
        c = rng.normal(size=d)
        c /= max(np.linalg.norm(c), 1e-12)
        try:
            _, x, _, capped = pen.linear_max(inner, c)
        except SolverStalled:
            continue
        if not capped:
            points.append(x)
    n_interior = int(interior_fraction * n_directions)
    for _ in range(n_interior):
        if len(points) < 2:
            break
        i, j = rng.integers(0, len(points), size=2)
        w = rng.uniform()
        points.append(w * points[i] + (1 - w) * points[j])
    return points


def sampling_oracle(inner, outer, n_samples=64, seed=0, points=None):
    """Probabilistic ground-truth channel: sample the inner projection and
    test each point against the outer set.

    Returns ("Witness", Witness) on the first violation below
    -VIOLATION_TOL, else ("NoCounterexample", None).  A miss proves
    nothing; that is the point.
    """
    inner = pen.as_pencil(inner)
    outer_p = pen.as_pencil(outer)
    if points is None:
        points = sample_projection_points(inner, n_directions=n_samples, seed=seed)
    for x in points:
        if outer_p.m == 0:
            val = symcore.min_eigval(outer_p.evaluate(x))
        else:
            try:
                val, _ = membership_lift(outer_p, x)
            except SolverStalled:
                continue
        if val <= -VIOLATION_TOL:
            margin, ylift = membership_lift(inner, x)
            if margin >= -MEMBERSHIP_TOL:
                return "Witness", Witness(x=np.asarray(x), y=ylift, violation=float(val))
    return "NoCounterexample", None


def circumradius(inner, ball_dim, r_lo, r_hi, tol_r=1e-3, mode="projected",
                 order=0, trace=None):
    """Bisection on the ball radius using the sign of the order-``order``
    membership margin; requires a sign change across [r_lo, r_hi]."""
    if r_lo >= r_hi:
        raise ContractViolation("need r_lo < r_hi")
    build = (
        sos.build_projected_module_membership
        if mode == "projected"
        else sos.build_plain_module_membership
    )

    def margin(r):
        t0 = time.perf_counter()
        prog = build(inner, pen.ball_pencil(ball_dim, r), order)
        sol = prog.solve()
        if sol.status not in (sdp.STATUS_OPTIMAL, sdp.STATUS_STALLED):
            raise SolverStalled(f"margin at r={r} unresolved: {sol.status}", sol)
        mu = prog.mu_value(sol)
        if trace is not None:
            trace.append((r, mu, time.perf_counter() - t0))
        return mu

    lo_val = margin(r_lo)
    hi_val = margin(r_hi)
    if lo_val >= 0 or hi_val <= 0:
        raise ContractViolation(
            f"margin does not change sign on bracket: mu({r_lo})={lo_val:.3e}, "
            f"mu({r_hi})={hi_val:.3e}"
        )
    lo, hi = r_lo, r_hi
    while hi - lo > tol_r:
        mid = 0.5 * (lo + hi)
        if margin(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Automatic dispatch
# ---------------------------------------------------------------------------


def _is_diagonal_pencil(p):
    return all(
        np.max(np.abs(m - np.diag(np.diag(m)))) <= 1e-12
        for m in (p.a0,) + p.ax + p.ay
    )


def decide(inner, outer, method="auto", order=None, t_max=2, arch_bound=None,
           seed=0, allow_c0=True):
    """Dispatch a containment question to the appropriate criterion.

    auto: polyhedral data with non-projected outer goes to the exact LP
    test; a diagonal non-projected outer pencil to the exact order-0 test;
    other non-projected outers to the solitary criterion and then the
    hierarchy; projected outers to the bilinear criteria at orders 1, 2.
    """
    inner_is_poly = isinstance(inner, pen.HPolyhedronProj)
    outer_is_poly = isinstance(outer, pen.HPolyhedronProj)
    if method == "lp":
        return lp_containment(inner, outer, allow_c0=allow_c0)
    if method == "solitary":
        return solitary_criterion(pen.as_pencil(inner), pen.as_pencil(outer))
    if method in ("hierarchy", "hierarchy-plain"):
        mode = "projected" if method == "hierarchy" else "plain"
        t_hi = t_max if order is None else order
        inner_p = pen.as_pencil(inner)
        if mode == "plain":
            inner_p = inner_p.fold_projection() if inner_p.m else inner_p
        return hierarchy(inner_p, pen.as_pencil(outer), t_max=t_hi, mode=mode)
    if method == "pis-in-h":
        return pis_in_h_exact(pen.as_pencil(inner), pen.as_pencil(outer))
    if method == "bilinear":
        t = 1 if order is None else order
        if inner_is_poly and outer_is_poly:
            return bilinear_ph_ph(inner, outer, t=t, t_max=t_max,
                                  arch_bound=arch_bound, seed=seed)
        outer_p = pen.as_pencil(outer)
        if outer_p.m == 0:
            raise ContractViolation("bilinear method needs a projected outer set")
        return bilinear_ps_ps(pen.as_pencil(inner), outer_p, t=t, t_max=t_max,
                              arch_bound=arch_bound, seed=seed)
    if method == "pos-map":
        chat, flag, verdict = positive_map_matrix(pen.as_pencil(inner), pen.as_pencil(outer))
        verdict.method = "pos-map"
        verdict.certificate = verdict.certificate or {}
        verdict.certificate["completely_positive"] = bool(flag)
        if chat is not None:
            verdict.certificate["C_hat"] = chat.tolist()
        return verdict
    if method == "oracle":
        t0 = time.perf_counter()
        status, witness = sampling_oracle(inner, outer, n_samples=128, seed=seed)
        if status == "Witness":
            v = Verdict(NOT_CONTAINED, "oracle", witness=witness,
                        residuals={"witness_violation": witness.violation})
        else:
            v = Verdict(UNKNOWN, "oracle",
                        messages=["no counterexample found (not a proof)"])
        return _timed(v, t0)
    if method != "auto":
        raise ContractViolation(f"unknown method {method!r}")

    # auto dispatch
    if inner_is_poly and outer_is_poly and outer.m == 0:
        return lp_containment(inner, outer, allow_c0=allow_c0)
    outer_p = pen.as_pencil(outer)
    inner_p = pen.as_pencil(inner)
    if outer_p.m == 0:
        if _is_diagonal_pencil(outer_p):
            return pis_in_h_exact(inner_p, outer_p)
        verdict = solitary_criterion(inner_p, outer_p)
        if verdict.status == CONTAINED:
            return verdict
        return hierarchy(inner_p, outer_p, t_max=t_max)
    if inner_is_poly and outer_is_poly:
        return bilinear_ph_ph(inner, outer, t=1, t_max=t_max,
                              arch_bound=arch_bound, seed=seed)
    return bilinear_ps_ps(inner_p, outer_p, t=1, t_max=t_max,
                          arch_bound=arch_bound, seed=seed)
