"""Linear matrix pencils, projected spectrahedra and polyhedra.

A pencil ``A(x, y) = A0 + sum_p x_p Ax[p] + sum_q y_q Ay[q]`` keeps its
retained variables ``x`` (d of them) separate from the projected-away
variables ``y`` (m of them); the projected spectrahedron is the set of ``x``
for which some ``y`` makes the pencil psd.  H-polyhedra carry the analogous
``a + A x + A' y >= 0`` data and convert to diagonal pencils (normal form).

The emptiness / strict-feasibility / constraint-qualification predicates
compile small margin SDPs and run them through :mod:`spectainer.sdp`.
"""

from __future__ import annotations

import numpy as np

from . import sdp, symcore
from .errors import ContractViolation, InstanceLookupError, SolverStalled

MARGIN_CAP = 1.0  # feasibility margins are capped at 1 to keep the SDP bounded
DEFAULT_TOL = 1e-7


class LinearPencil:
    """Symmetric-matrix pencil with d retained and m projected variables."""

    def __init__(self, a0, ax=(), ay=()):
        self.a0 = symcore.symmetrize(a0, "A0")
        self.k = self.a0.shape[0]
        self.ax = tuple(symcore.symmetrize(m, "Ax coefficient") for m in ax)
        self.ay = tuple(symcore.symmetrize(m, "Ay coefficient") for m in ay)
        for mat in self.ax + self.ay:
            if mat.shape != (self.k, self.k):
                raise ContractViolation("all pencil coefficients must share size k")

    @property
    def d(self):
        return len(self.ax)

    @property
    def m(self):
        return len(self.ay)

    def __repr__(self):
        return f"LinearPencil(k={self.k}, d={self.d}, m={self.m})"

    def evaluate(self, x, y=()):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float)) if len(np.atleast_1d(y)) else np.zeros(0)
        if x.shape != (self.d,):
            raise ContractViolation(f"expected {self.d} retained coordinates, got {x.shape}")
        if y.shape != (self.m,):
            raise ContractViolation(f"expected {self.m} projected coordinates, got {y.shape}")
        out = self.a0.copy()
        for xi, mat in zip(x, self.ax):
            out += xi * mat
        for yi, mat in zip(y, self.ay):
            out += yi * mat
        return out

    def fold_projection(self):
        """Treat the projected variables as retained ones (d' = d + m, m' = 0)."""
        return LinearPencil(self.a0, self.ax + self.ay, ())

    def fix_x(self, x):
        """Pencil in the projected variables only, with x substituted."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.d,):
            raise ContractViolation("x length mismatch")
        a0 = self.a0.copy()
        for xi, mat in zip(x, self.ax):
            a0 += xi * mat
        return LinearPencil(a0, (), self.ay)

    def to_json_dict(self):
        return {
            "k": self.k,
            "d": self.d,
            "m": self.m,
            "A0": self.a0.tolist(),
            "Ax": [m.tolist() for m in self.ax],
            "Ay": [m.tolist() for m in self.ay],
        }

    @classmethod
    def from_json_dict(cls, data):
        pencil = cls(data["A0"], data.get("Ax", ()), data.get("Ay", ()))
        for key, val in (("k", pencil.k), ("d", pencil.d), ("m", pencil.m)):
            if key in data and int(data[key]) != val:
                raise ContractViolation(f"declared {key}={data[key]} but matrices give {val}")
        return pencil


class HPolyhedronProj:
    """Projected H-polyhedron {x | exists y: a + A x + A' y >= 0}."""

    def __init__(self, a, A, Aprime=None):
        self.a = np.asarray(a, dtype=float).reshape(-1)
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] != self.a.shape[0]:
            raise ContractViolation("A must have one row per entry of a")
        if Aprime is None:
            Aprime = np.zeros((self.a.shape[0], 0))
        self.Aprime = np.asarray(Aprime, dtype=float)
        if self.Aprime.ndim != 2 or self.Aprime.shape[0] != self.a.shape[0]:
            raise ContractViolation("Aprime must have one row per entry of a")

    @property
    def k(self):
        return self.a.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    @property
    def m(self):
        return self.Aprime.shape[1]

    def __repr__(self):
        return f"HPolyhedronProj(rows={self.k}, d={self.d}, m={self.m})"

    def rows_at(self, x, y=()):
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1) if self.m else np.zeros(0)
        return self.a + self.A @ x + (self.Aprime @ y if self.m else 0.0)

    def to_json_dict(self):
        return {
            "rows": self.k,
            "d": self.d,
            "m": self.m,
            "a": self.a.tolist(),
            "A": self.A.tolist(),
            "Aprime": self.Aprime.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data):
        poly = cls(data["a"], data["A"], data.get("Aprime"))
        for key, val in (("rows", poly.k), ("d", poly.d), ("m", poly.m)):
            if key in data and int(data[key]) != val:
                raise ContractViolation(f"declared {key}={data[key]} but arrays give {val}")
        return poly


def polyhedron_to_normal_form(poly):
    """Diagonal pencil whose positivity domain is the (projected) polyhedron."""
    k = poly.k
    a0 = np.diag(poly.a)
    ax = [np.diag(poly.A[:, p]) for p in range(poly.d)]
    ay = [np.diag(poly.Aprime[:, q]) for q in range(poly.m)]
    return LinearPencil(a0, ax, ay)


def as_pencil(obj):
    if isinstance(obj, LinearPencil):
        return obj
    if isinstance(obj, HPolyhedronProj):
        return polyhedron_to_normal_form(obj)
    raise ContractViolation(f"cannot interpret {type(obj).__name__} as a pencil")


def ball_pencil(d, r):
    """Arrowhead pencil of the d-ball of radius r:
    I_{d+1} + sum_p (x_p / r) (E_{p,d+1} + E_{d+1,p})."""
    if d < 1:
        raise ContractViolation("dimension must be >= 1")
    if r <= 0:
        raise ContractViolation("radius must be positive")
    a0 = np.eye(d + 1)
    ax = []
    for p in range(d):
        e = np.zeros((d + 1, d + 1))
        e[p, d] = e[d, p] = 1.0 / r
        ax.append(e)
    return LinearPencil(a0, ax, ())


def _e(k, i, j, v=1.0):
    out = np.zeros((k, k))
    out[i, j] = v
    if i != j:
        out[j, i] = v
    return out


def _two_disks():
    # [[1-x2, x1-y], [x1-y, 1+x2]] (+) [[1-y, 0], [0, 1+y]]
    a0 = np.eye(4)
    ax1 = _e(4, 0, 1)
    ax2 = np.diag([-1.0, 1.0, 0.0, 0.0])
    ay = _e(4, 0, 1, -1.0) + np.diag([0.0, 0.0, -1.0, 1.0])
    return LinearPencil(a0, [ax1, ax2], [ay])


def _tv_screen():
    # [[1+y1, y2], [y2, 1-y1]] (+) [[1, x1], [x1, y1]] (+) [[1, x2], [x2, y2]]
    a0 = np.diag([1.0, 1.0, 1.0, 0.0, 1.0, 0.0])
    ax1 = _e(6, 2, 3)
    ax2 = _e(6, 4, 5)
    ay1 = np.diag([1.0, -1.0, 0.0, 1.0, 0.0, 0.0])
    ay2 = _e(6, 0, 1) + _e(6, 5, 5)
    return LinearPencil(a0, [ax1, ax2], [ay1, ay2])


def _interval():
    # diag(1 - x, 1 + x): the interval [-1, 1]
    return LinearPencil(np.eye(2), [np.diag([-1.0, 1.0])], ())


def _cylinder_interval():
    # [[-y1, x, 0], [x, 1-y2, 0], [0, 0, -x+y2]]: projection is (-inf, 1)
    a0 = _e(3, 1, 1)
    ax = _e(3, 0, 1) + _e(3, 2, 2, -1.0)
    ay1 = _e(3, 0, 0, -1.0)
    ay2 = np.diag([0.0, -1.0, 1.0])
    return LinearPencil(a0, [ax], [ay1, ay2])


_INSTANCES = {
    "two-disks": _two_disks,
    "tv-screen": _tv_screen,
    "interval": _interval,
    "cylinder-interval": _cylinder_interval,
    "proj-cone-ex1": lambda: HPolyhedronProj([1.0, 1.0], [[-1.0], [1.0]], [[1.0], [1.0]]),
    "proj-strip-ex2": lambda: HPolyhedronProj([1.0, 1.0], [[1.0], [-1.0]], [[-1.0], [1.0]]),
    "singleton-simplex-inner": lambda: HPolyhedronProj(
        [1.0, -1.0, 0.0], [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]
    ),
    "singleton-simplex-outer": lambda: HPolyhedronProj(
        [0.0, 2.0, 2.0], [[1.0, 0.0], [-1.0, -1.0], [-1.0, 1.0]]
    ),
}


def instance_names():
    return sorted(_INSTANCES)


def instance(name):
    """Builtin pencil/polyhedron with coefficients exactly as published."""
    try:
        factory = _INSTANCES[name]
    except KeyError:
        raise InstanceLookupError(
            f"unknown instance {name!r}; known: {', '.join(instance_names())}"
        ) from None
    return factory()


# ---------------------------------------------------------------------------
# Margin SDPs
# ---------------------------------------------------------------------------


def _margin_lmi(pencil, include_x=True):
    """LmiProblem for max t s.t. A(x, y) - t I >= 0, t <= MARGIN_CAP.

    Variables are (x if include_x, y, t); returns (lmi, slices).
    """
    nx = pencil.d if include_x else 0
    nv = nx + pencil.m + 1
    lmi = sdp.LmiProblem(nv)
    coeffs = []
    if include_x:
        coeffs.extend(pencil.ax)
    coeffs.extend(pencil.ay)
    coeffs.append(-np.eye(pencil.k))
    lmi.add_matrix_block(pencil.a0, coeffs)
    cap_row = np.zeros(nv)
    cap_row[-1] = -1.0
    lmi.add_row(MARGIN_CAP, cap_row)
    obj = np.zeros(nv)
    obj[-1] = 1.0
    lmi.set_objective(obj)
    return lmi, (slice(0, nx), slice(nx, nx + pencil.m))


def feasibility_margin(pencil, x=None, options=None):
    """Optimal value and witness of the emptiness/interiority margin SDP.

    Returns (margin, x, y).  ``margin`` is capped at MARGIN_CAP; negative
    values certify emptiness, positive ones an interior point.
    """
    work = pencil if x is None else pencil.fix_x(x)
    lmi, (sx, sy) = _margin_lmi(work, include_x=(x is None))
    value, v, sol = lmi.solve(options)
    if not np.isfinite(value) or sol.status == sdp.STATUS_STALLED:
        raise SolverStalled(f"margin SDP did not resolve: {sol.status}", sol)
    xv = v[sx] if x is None else np.asarray(x, dtype=float)
    return value, xv, v[sy]


def is_empty(pencil, tol=DEFAULT_TOL):
    """True iff the full spectrahedron (equivalently its projection) is empty."""
    value, _, _ = feasibility_margin(pencil)
    return value < -tol


def is_strictly_feasible(pencil, tol=DEFAULT_TOL):
    """True iff the pencil admits a strictly positive-definite point."""
    value, _, _ = feasibility_margin(pencil)
    return value > tol


def linear_max(pencil, c, cap=1e6, options=None):
    """Maximize c @ x over the projected spectrahedron (lift included).

    Returns (value, x, y, capped).  A safety cap keeps the SDP bounded; a
    value at the cap flags an (effectively) unbounded direction.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape != (pencil.d,):
        raise ContractViolation("direction length must equal d")
    nv = pencil.d + pencil.m
    lmi = sdp.LmiProblem(nv)
    lmi.add_matrix_block(pencil.a0, list(pencil.ax) + list(pencil.ay))
    row = np.zeros(nv)
    row[: pencil.d] = -c
    lmi.add_row(cap, row)  # cap - c @ x >= 0
    obj = np.zeros(nv)
    obj[: pencil.d] = c
    lmi.set_objective(obj)
    value, v, sol = lmi.solve(options)
    if not np.isfinite(value) or sol.status == sdp.STATUS_STALLED:
        raise SolverStalled(f"linear optimization stalled: {sol.status}", sol)
    return value, v[: pencil.d], v[pencil.d :], value >= cap * (1 - 1e-6)


def span_psd_witness(mats, tol=DEFAULT_TOL, options=None):
    """Nonzero psd element of span(mats) scaled to unit trace, or None.

    Solved in primal form over W with trace <= 1 and orthogonality to a
    basis of the complement of span(mats), so the SDP has a strictly
    feasible dual side even when the span misses the pd cone.
    """
    mats = [symcore.symmetrize(m) for m in mats]
    if not mats:
        return None
    k = mats[0].shape[0]
    rows = np.stack([_svec(m) for m in mats])
    comp = symcore.nullspace_basis(rows, 1e-12)
    specs = (sdp.BlockSpec(k, "sdp"), sdp.BlockSpec(1, "diag"))
    cmat = sdp.BlockMatrix(specs, [np.eye(k), np.zeros(1)])
    cons = []
    rhs = []
    for r in range(comp.shape[1]):
        cons.append(
            sdp.BlockMatrix(specs, [_unsvec(comp[:, r], k), np.zeros(1)])
        )
        rhs.append(0.0)
    cons.append(sdp.BlockMatrix(specs, [np.eye(k), np.ones(1)]))
    rhs.append(1.0)
    problem = sdp.SdpProblem(specs, cmat, cons, rhs)
    sol = sdp.solve(problem, options)
    if sol.status != sdp.STATUS_OPTIMAL:
        raise SolverStalled(f"psd-span SDP did not resolve: {sol.status}", sol)
    if sol.primal_objective <= max(tol, 0.5):
        return None
    w = sol.X.blocks[0]
    return w / np.trace(w)


CQ_WHOLE_SPACE = "WholeSpace"
CQ_HOLDS = "CQHolds"
CQ_FAILS = "CQFails"


def outer_projection_cq(pencil, tol=DEFAULT_TOL):
    """Classify the projection coefficients of an outer pencil.

    WholeSpace: span(Ay) meets the positive-definite cone, so the projection
    is all of R^d.  CQHolds: the only psd element of span(Ay) is zero (the
    closure in the bilinear criterion can be dropped).  CQFails: a nonzero
    psd combination exists; returns it as evidence.
    """
    if pencil.m < 1:
        raise ContractViolation("outer pencil must have projected variables")
    nv = pencil.m + 1
    lmi = sdp.LmiProblem(nv)
    lmi.add_matrix_block(
        np.zeros((pencil.k, pencil.k)), list(pencil.ay) + [-np.eye(pencil.k)]
    )
    cap = np.zeros(nv)
    cap[-1] = -1.0
    lmi.add_row(MARGIN_CAP, cap)
    obj = np.zeros(nv)
    obj[-1] = 1.0
    lmi.set_objective(obj)
    value, _, sol = lmi.solve()
    if not np.isfinite(value) or sol.status == sdp.STATUS_STALLED:
        raise SolverStalled(f"whole-space SDP did not resolve: {sol.status}", sol)
    if value > tol:
        return CQ_WHOLE_SPACE, None
    witness = span_psd_witness(pencil.ay, tol=tol)
    if witness is None:
        return CQ_HOLDS, None
    return CQ_FAILS, witness


def _svec(m):
    k = m.shape[0]
    iu = np.triu_indices(k)
    w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return m[iu] * w


def _unsvec(v, k):
    out = np.zeros((k, k))
    iu = np.triu_indices(k)
    w = np.where(iu[0] == iu[1], 1.0, 1.0 / np.sqrt(2.0))
    out[iu] = v * w
    out.T[iu] = out[iu]
    return out


def recession_direction_heuristic(pencil, n_samples=16, seed=0):
    """Advisory-only probe for an unbounded direction of the spectrahedron.

    Samples random normalizing functionals c and solves
    max t s.t. sum_i w_i M_i - t I >= 0, c @ w = 1; a strictly positive
    margin exhibits w with a psd pure-linear part, i.e. a recession
    direction when the set is nonempty.  A None result is NOT a proof of
    boundedness.
    """
    mats = list(pencil.ax) + list(pencil.ay)
    if not mats:
        return None
    rng = np.random.default_rng(seed)
    nv = len(mats) + 1
    for _ in range(n_samples):
        c = rng.normal(size=len(mats))
        c /= np.linalg.norm(c)
        lmi = sdp.LmiProblem(nv)
        lmi.add_matrix_block(np.zeros((pencil.k, pencil.k)), mats + [-np.eye(pencil.k)])
        row = np.zeros(nv)
        row[:-1] = -c
        lmi.add_row(1.0, row)
        row2 = np.zeros(nv)
        row2[:-1] = c
        lmi.add_row(-1.0, row2)
        cap = np.zeros(nv)
        cap[-1] = -1.0
        lmi.add_row(MARGIN_CAP, cap)
        obj = np.zeros(nv)
        obj[-1] = 1.0
        lmi.set_objective(obj)
        try:
            value, v, _ = lmi.solve()
        except SolverStalled:
            continue
        if np.isfinite(value) and value > 1e-6:
            return v[:-1]
    return None


def load_instance_dict(data):
    """JSON loader dispatching on the documented schemas."""
    if "A0" in data:
        return LinearPencil.from_json_dict(data)
    if "a" in data:
        return HPolyhedronProj.from_json_dict(data)
    raise ContractViolation("unrecognized instance schema: need 'A0' or 'a'")
