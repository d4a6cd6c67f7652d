"""Compilation of truncated quadratic-module memberships into SDPs.

Matrix polynomials are sparse dicts mapping exponent tuples to (L x L)
coefficient arrays; scalar polynomials map exponents to floats.  A compiled
program carries one Gram block per sum-of-squares multiplier plus native
free scalars (the margin mu and the coefficients of the equality-ideal
multipliers), and one linear equation per matched monomial and matrix entry.

Plain sos multipliers get an iterated diagonal-consistency basis reduction:
a basis monomial whose doubled exponent no other term can reach forces its
Gram row to zero in every feasible point, so dropping it changes nothing
while restoring an interior for the interior-point method.

The certificate extracted from a solve is re-verified by symbolic expansion
that uses no solver state; a residual above tolerance raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .errors import CertificateInvalid, ContractViolation

# ---------------------------------------------------------------------------
# Monomials and polynomial dictionaries
# ---------------------------------------------------------------------------


def _grlex_key(mono):
    return (sum(mono), tuple(-e for e in mono))


class MonomialBasis:
    """All monomials in ``nvars`` variables up to total degree ``degree``,
    in graded-lexicographic order (constant first)."""

    def __init__(self, nvars, degree):
        if nvars < 0 or degree < 0:
            raise ContractViolation("nvars and degree must be nonnegative")
        self.nvars = nvars
        self.degree = degree
        self.monomials = _monomials_upto(nvars, degree)
        self.index = {m: i for i, m in enumerate(self.monomials)}

    def __len__(self):
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)


def _monomials_upto(nvars, degree):
    if nvars == 0:
        return [()]

    def fixed_total(n, total):
        if n == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in fixed_total(n - 1, total - first):
                yield (first,) + rest

    out = []
    for total in range(degree + 1):
        out.extend(fixed_total(nvars, total))
    return out


def binomial_size(nvars, degree):
    return math.comb(nvars + degree, degree)


def mono_mul(a, b):
    return tuple(x + y for x, y in zip(a, b))


def poly_add(dst, src, scale=1.0):
    for mono, coeff in src.items():
        dst[mono] = dst.get(mono, 0.0) + scale * coeff
    return dst


def poly_mul(a, b):
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            key = mono_mul(ma, mb)
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def poly_degree(p):
    return max((sum(m) for m in p), default=0)


def matpoly_add(dst, src, scale=1.0):
    for mono, coeff in src.items():
        if mono in dst:
            dst[mono] = dst[mono] + scale * coeff
        else:
            dst[mono] = scale * np.array(coeff, dtype=float)
    return dst


def matpoly_kron(a, b):
    """Kronecker product of two matrix polynomials (valid psd certificate
    for the product of two psd constraints)."""
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            key = mono_mul(ma, mb)
            term = np.kron(ca, cb)
            if key in out:
                out[key] = out[key] + term
            else:
                out[key] = term
    return out


def matpoly_degree(p):
    return max((sum(m) for m in p), default=0)


def matpoly_max_coeff(p):
    return max((float(np.max(np.abs(c))) for c in p.values()), default=0.0)


def matpoly_frobenius(p, q):
    """Scalar polynomial <P(v), Q(v)> of two matrix polynomials."""
    out = {}
    for ma, ca in p.items():
        for mb, cb in q.items():
            val = float(np.sum(ca * cb))
            if val != 0.0:
                key = mono_mul(ma, mb)
                out[key] = out.get(key, 0.0) + val
    return out


def pencil_to_matpoly(pen, nvars, x_slots, y_slots=()):
    """Embed a pencil into an nvars-variable matrix polynomial.

    ``x_slots`` (length d) and ``y_slots`` (length m) give the variable index
    each pencil coordinate occupies; pass y_slots=() to take A(x, 0).
    """
    zero = (0,) * nvars
    out = {zero: np.array(pen.a0, dtype=float)}

    def unit(i):
        e = [0] * nvars
        e[i] = 1
        return tuple(e)

    if len(x_slots) != pen.d:
        raise ContractViolation("x_slots length must equal pencil.d")
    for slot, mat in zip(x_slots, pen.ax):
        matpoly_add(out, {unit(slot): mat})
    if y_slots:
        if len(y_slots) != pen.m:
            raise ContractViolation("y_slots length must equal pencil.m")
        for slot, mat in zip(y_slots, pen.ay):
            matpoly_add(out, {unit(slot): mat})
    return {m: c for m, c in out.items() if np.any(c)} or {zero: np.zeros_like(pen.a0)}


def sym_matrix_var(l, nvars, slot_of):
    """Matrix polynomial Z(w) whose (i, j) entry is the scalar variable
    w[slot_of[(i, j)]] (i <= j)."""
    out = {}
    for i in range(l):
        for j in range(i, l):
            e = [0] * nvars
            e[slot_of[(i, j)]] = 1
            coeff = np.zeros((l, l))
            coeff[i, j] = 1.0
            coeff[j, i] = 1.0
            matpoly_add(out, {tuple(e): coeff})
    return out


# ---------------------------------------------------------------------------
# SOS programs
# ---------------------------------------------------------------------------


@dataclass
class MultiplierSpec:
    """One Hol-Scherer term <S, G>_L with S an sos-matrix of size g * L.

    ``basis_degree`` bounds the Gram basis; ``orthogonality`` lists matrix
    polynomials H with <S, H>_L required to vanish identically.
    """

    name: str
    G: dict
    g: int
    basis_degree: int
    orthogonality: list = field(default_factory=list)

    def is_plain(self, nvars):
        """A bare sos multiplier: scalar constraint identically one."""
        zero = (0,) * nvars
        return (
            self.g == 1
            and not self.orthogonality
            and set(self.G) == {zero}
            and self.G[zero].shape == (1, 1)
            and float(self.G[zero][0, 0]) == 1.0
        )


@dataclass
class FreeTermSpec:
    """Equality-ideal term lambda(v) * h(v) * I_L with free polynomial
    multiplier of total degree <= degree."""

    name: str
    h: dict
    degree: int


class SosProgram:
    """Declarative membership program: target(v) - mu*I in the module spanned
    by the given multipliers and ideal terms."""

    def __init__(self, nvars, size, target, multipliers, free_terms=(),
                 with_mu=True, var_names=None, drop_vars=()):
        self.nvars = nvars
        self.size = size
        self.target = {m: np.array(c, dtype=float) for m, c in target.items()}
        self.multipliers = list(multipliers)
        self.free_terms = list(free_terms)
        self.with_mu = with_mu
        self.var_names = tuple(var_names) if var_names else tuple(
            f"v{i}" for i in range(nvars)
        )
        # Pivot variables of affine equality constraints, excluded from every
        # Gram basis: modulo the ideal terms (degree 2t - 1) this loses no
        # certificates, while it removes the fixed moment-matrix kernel the
        # equalities would otherwise force, restoring dual interiority.
        self.drop_vars = frozenset(drop_vars)
        self.scale = max(matpoly_max_coeff(self.target), 1e-30)
        self._bases = None
        self._compiled = None

    # -- bases with diagonal-consistency pruning ---------------------------

    def bases(self):
        """Per-multiplier Gram bases; plain sos multipliers are pruned.

        Prune rule, iterated to a fixpoint: a basis monomial beta of a plain
        multiplier is dropped when 2*beta is unreachable by the target, the
        ideal terms, every structured multiplier, and every plain-multiplier
        entry other than the lone diagonal (beta, beta).  Such rows vanish
        in every feasible Gram, so the feasible set is unchanged.
        """
        if self._bases is not None:
            return self._bases
        nv = self.nvars
        plain = [i for i, s in enumerate(self.multipliers) if s.is_plain(nv)]
        raw = [
            [
                m
                for m in _monomials_upto(nv, spec.basis_degree)
                if all(m[i] == 0 for i in self.drop_vars)
            ]
            for spec in self.multipliers
        ]
        reach = set(self.target)
        for term in self.free_terms:
            for nu in _monomials_upto(nv, term.degree):
                for kappa in term.h:
                    reach.add(mono_mul(nu, kappa))
        for i, spec in enumerate(self.multipliers):
            if i in plain:
                continue
            pair_sums = set()
            for a in raw[i]:
                for b in raw[i]:
                    pair_sums.add(mono_mul(a, b))
            for delta in spec.G:
                reach.update(mono_mul(pm, delta) for pm in pair_sums)
                for h in spec.orthogonality:
                    del h  # orthogonality adds rows, not reach
        sets = {i: set(raw[i]) for i in plain}
        changed = True
        while changed:
            changed = False
            for i in plain:
                for beta in sorted(sets[i], key=_grlex_key):
                    two = mono_mul(beta, beta)
                    if two in reach:
                        continue
                    paired = False
                    for j in plain:
                        for alpha in sets[j]:
                            rem = tuple(t - a for t, a in zip(two, alpha))
                            if min(rem) < 0 or tuple(rem) not in sets[j]:
                                continue
                            if not (j == i and alpha == beta):
                                paired = True
                                break
                        if paired:
                            break
                    if not paired:
                        for j in plain:
                            sets[j].discard(beta)
                        changed = True
        out = []
        for i in range(len(self.multipliers)):
            if i in plain:
                out.append(sorted(sets[i], key=_grlex_key))
            else:
                out.append(raw[i])
        self._bases = out
        return out

    # -- compilation -------------------------------------------------------

    def compile(self):
        if self._compiled is None:
            self._compiled = _compile_sos(self)
        return self._compiled

    def solve(self, options=None):
        compiled = self.compile()
        solution = sdp.solve(compiled.problem, options)
        return solution

    def mu_value(self, solution):
        if not self.with_mu:
            raise ContractViolation("program has no margin variable")
        return float(solution.u[0] * self.scale)

    def moment_vector(self, solution):
        """Dual values keyed by monomial for the diagonal target equations,
        normalized so the constant monomial reads 1 (best-effort witness
        seed; meaningful only near optimality)."""
        compiled = self.compile()
        zero = (0,) * self.nvars
        acc = {}
        for (mono, i, j), row in compiled.eq_index.items():
            if i == j:
                acc.setdefault(mono, 0.0)
                acc[mono] += solution.y[row]
        base = acc.get(zero, 0.0)
        if abs(base) < 1e-12:
            return None
        return {m: v / base for m, v in acc.items()}


@dataclass
class CompiledSos:
    problem: sdp.SdpProblem
    gram_blocks: dict  # multiplier name -> block index
    free_layout: dict  # term name -> (offset into u, monomial list)
    eq_index: dict  # (mono, i, j) -> equation row


def _compile_sos(prog):
    L = prog.size
    nv = prog.nvars
    zero = (0,) * nv
    bases = prog.bases()

    # Union of monomials any term can touch.
    monos = set(prog.target)
    for spec, basis in zip(prog.multipliers, bases):
        pair_monos = set()
        for a in basis:
            for b in basis:
                pair_monos.add(mono_mul(a, b))
        for delta in spec.G:
            monos.update(mono_mul(pm, delta) for pm in pair_monos)
    free_layout = {}
    for term in prog.free_terms:
        lam_monos = _monomials_upto(nv, term.degree)
        free_layout[term.name] = lam_monos
        for nu in lam_monos:
            for kappa in term.h:
                monos.add(mono_mul(nu, kappa))

    eq_keys = []
    for mono in sorted(monos, key=_grlex_key):
        for i in range(L):
            for j in range(i, L):
                eq_keys.append((mono, i, j))
    eq_index = {key: row for row, key in enumerate(eq_keys)}

    # Orthogonality rows appended after the target-matching rows.
    orth_keys = []
    for ridx, (spec, basis) in enumerate(zip(prog.multipliers, bases)):
        for hidx, hpoly in enumerate(spec.orthogonality):
            omonos = set()
            for a in basis:
                for b in basis:
                    for delta in hpoly:
                        omonos.add(mono_mul(mono_mul(a, b), delta))
            for mono in sorted(omonos, key=_grlex_key):
                for i in range(L):
                    for j in range(i, L):
                        orth_keys.append((ridx, hidx, mono, i, j))
    orth_index = {key: len(eq_keys) + row for row, key in enumerate(orth_keys)}
    n_eqs = len(eq_keys) + len(orth_keys)

    specs = []
    gram_blocks = {}
    for spec, basis in zip(prog.multipliers, bases):
        gram_blocks[spec.name] = len(specs)
        specs.append(sdp.BlockSpec(spec.g * L * len(basis), "sdp"))
    specs = tuple(specs)
    n_free = (1 if prog.with_mu else 0) + sum(
        len(free_layout[t.name]) for t in prog.free_terms
    )

    # Dense per-equation constraint data, assembled block by block.
    mats = [
        [np.zeros((s.size, s.size)) for s in specs]
        for _ in range(n_eqs)
    ]
    rhs = np.zeros(n_eqs)
    tscale = prog.scale
    for mono, coeff in prog.target.items():
        for i in range(L):
            for j in range(i, L):
                rhs[eq_index[(mono, i, j)]] = coeff[i, j] / tscale

    for ridx, (spec, basis) in enumerate(zip(prog.multipliers, bases)):
        blk = gram_blocks[spec.name]
        g = spec.g
        B = len(basis)
        rows_of = [
            (np.arange(g) + i * g) * B for i in range(L)
        ]  # row base indices for (I, a, alpha=0)
        contributions = {}
        for delta, gcoeff in spec.G.items():
            if not np.any(gcoeff):
                continue
            for ia, alpha in enumerate(basis):
                for ib, beta in enumerate(basis):
                    gamma = mono_mul(mono_mul(alpha, beta), delta)
                    contributions.setdefault(gamma, []).append((ia, ib, gcoeff))
        for gamma, items in contributions.items():
            for i in range(L):
                ri = rows_of[i]
                for j in range(i, L):
                    rj = rows_of[j]
                    w = mats[eq_index[(gamma, i, j)]][blk]
                    for ia, ib, gcoeff in items:
                        w[np.ix_(ri + ia, rj + ib)] += gcoeff
        for hidx, hpoly in enumerate(spec.orthogonality):
            ocontrib = {}
            for delta, gcoeff in hpoly.items():
                if not np.any(gcoeff):
                    continue
                for ia, alpha in enumerate(basis):
                    for ib, beta in enumerate(basis):
                        gamma = mono_mul(mono_mul(alpha, beta), delta)
                        ocontrib.setdefault(gamma, []).append((ia, ib, gcoeff))
            for gamma, items in ocontrib.items():
                for i in range(L):
                    ri = rows_of[i]
                    for j in range(i, L):
                        rj = rows_of[j]
                        w = mats[orth_index[(ridx, hidx, gamma, i, j)]][blk]
                        for ia, ib, gcoeff in items:
                            w[np.ix_(ri + ia, rj + ib)] += gcoeff

    fmat = np.zeros((n_eqs, n_free))
    gvec = np.zeros(n_free)
    offset = 0
    if prog.with_mu:
        for i in range(L):
            fmat[eq_index[(zero, i, i)], 0] = 1.0
        gvec[0] = 1.0
        offset = 1
    layout = {}
    for term in prog.free_terms:
        lam_monos = free_layout[term.name]
        layout[term.name] = (offset, lam_monos)
        for li, nu in enumerate(lam_monos):
            for kappa, hc in term.h.items():
                gamma = mono_mul(nu, kappa)
                for i in range(L):
                    fmat[eq_index[(gamma, i, i)], offset + li] += hc
        offset += len(lam_monos)
    free_layout = layout

    cmat = sdp.BlockMatrix.zeros(specs)
    constraints = [sdp.BlockMatrix(specs, m) for m in mats]
    labels = [f"match:{k}" for k in eq_keys] + [f"orth:{k}" for k in orth_keys]
    problem = sdp.SdpProblem(specs, cmat, constraints, rhs, labels=labels,
                             free_coeffs=fmat, free_obj=gvec)
    return CompiledSos(problem, gram_blocks, free_layout, eq_index)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass
class SosCertificate:
    order: int
    mu: float
    grams: dict  # multiplier name -> psd Gram matrix (rescaled)
    lambdas: dict  # free term name -> {monomial: coefficient}
    residual: float
    target_scale: float

    def to_json_dict(self):
        return {
            "order": self.order,
            "mu": self.mu,
            "residual": self.residual,
            "grams": {k: v.tolist() for k, v in sorted(self.grams.items())},
            "lambdas": {
                k: {"".join(map(str, m)): c for m, c in sorted(v.items())}
                for k, v in sorted(self.lambdas.items())
            },
        }


def gram_to_term(qmat, spec, basis, L):
    """Expand <S, G>_L for the Gram matrix qmat of multiplier S (independent
    of any solver state)."""
    g = spec.g
    B = len(basis)
    out = {}
    # S^{(I,J)}_{ab}(v) = sum_{alpha,beta} Q[(I g + a) B + alpha, (J g + b) B + beta] v^{alpha+beta}
    for delta, gcoeff in spec.G.items():
        if not np.any(gcoeff):
            continue
        for ia, alpha in enumerate(basis):
            for ib, beta in enumerate(basis):
                gamma = mono_mul(mono_mul(alpha, beta), delta)
                block = np.empty((L, L))
                for i in range(L):
                    ri = (np.arange(g) + i * g) * B + ia
                    for j in range(L):
                        rj = (np.arange(g) + j * g) * B + ib
                        block[i, j] = float(np.sum(qmat[np.ix_(ri, rj)] * gcoeff))
                if gamma in out:
                    out[gamma] = out[gamma] + block
                else:
                    out[gamma] = block
    return out


def extract_certificate(prog, solution, order, tol=1e-6):
    """Pull Gram matrices, ideal multipliers and mu out of a solution and
    re-verify the membership identity by symbolic expansion.

    Raises CertificateInvalid when the reconstruction residual exceeds
    tol * (1 + coefficient scale).
    """
    if solution.X is None:
        raise CertificateInvalid("no primal solution to extract from")
    compiled = prog.compile()
    scale = prog.scale
    grams = {}
    for spec in prog.multipliers:
        q = solution.X.blocks[compiled.gram_blocks[spec.name]] * scale
        grams[spec.name] = 0.5 * (q + q.T)
    lambdas = {}
    mu = 0.0
    if solution.u is not None and solution.u.size:
        if prog.with_mu:
            mu = float(solution.u[0] * scale)
        for term in prog.free_terms:
            offset, lam_monos = compiled.free_layout[term.name]
            coeffs = {}
            for li, nu in enumerate(lam_monos):
                val = float(solution.u[offset + li] * scale)
                if val != 0.0:
                    coeffs[nu] = val
            lambdas[term.name] = coeffs

    residual = certificate_residual(prog, grams, lambdas, mu)
    if residual > tol * (1.0 + scale):
        raise CertificateInvalid(
            f"certificate residual {residual:.3e} exceeds {tol:.1e} * (1 + {scale:.3e})"
        )
    return SosCertificate(order, mu, grams, lambdas, residual, scale)


def certificate_residual(prog, grams, lambdas, mu):
    """Max-norm coefficient residual of target - mu*I - module expression.

    Pure dictionary arithmetic over the declared polynomials; the solver is
    never consulted, so this is an independent verifier.
    """
    L = prog.size
    nv = prog.nvars
    zero = (0,) * nv
    bases = prog.bases()
    expr = {}
    for spec, basis in zip(prog.multipliers, bases):
        matpoly_add(expr, gram_to_term(grams[spec.name], spec, basis, L))
    for term in prog.free_terms:
        coeffs = lambdas.get(term.name, {})
        scalar = poly_mul(coeffs, term.h)
        for mono, c in scalar.items():
            matpoly_add(expr, {mono: c * np.eye(L)})
    matpoly_add(expr, {zero: mu * np.eye(L)})
    diff = dict(prog.target)
    matpoly_add(diff, expr, -1.0)
    worst = 0.0
    for coeff in diff.values():
        worst = max(worst, float(np.max(np.abs(coeff))))
    return worst


# ---------------------------------------------------------------------------
# Membership builders
# ---------------------------------------------------------------------------


def build_projected_module_membership(inner, outer, t, with_mu=True):
    """Program for outer(x) - mu*I in the order-t truncated projected module
    of the inner pencil: multipliers in x only, with the projection
    coefficients eliminated through orthogonality side conditions."""
    if outer.m != 0:
        raise ContractViolation("outer pencil must not have projected variables")
    if outer.d != inner.d:
        raise ContractViolation("inner and outer pencils must share d")
    nv = inner.d
    x_slots = list(range(nv))
    target = pencil_to_matpoly(outer, nv, x_slots)
    gx = pencil_to_matpoly(inner, nv, x_slots)  # A(x, 0)
    one = {(0,) * nv: np.ones((1, 1))}
    orth = [
        {(0,) * nv: np.array(aq, dtype=float)} for aq in inner.ay
    ]
    multipliers = [
        MultiplierSpec("offset", one, 1, t),
        MultiplierSpec("pencil", gx, inner.k, t, orthogonality=orth),
    ]
    return SosProgram(nv, outer.k, target, multipliers, with_mu=with_mu,
                      var_names=[f"x{i+1}" for i in range(nv)])


def build_plain_module_membership(inner, outer, t, with_mu=True):
    """Baseline program with multipliers over (x, y) and no elimination."""
    if outer.m != 0:
        raise ContractViolation("outer pencil must not have projected variables")
    if outer.d != inner.d:
        raise ContractViolation("inner and outer pencils must share d")
    nv = inner.d + inner.m
    x_slots = list(range(inner.d))
    y_slots = list(range(inner.d, nv))
    target = pencil_to_matpoly(outer, nv, x_slots)
    gfull = pencil_to_matpoly(inner, nv, x_slots, y_slots)
    one = {(0,) * nv: np.ones((1, 1))}
    multipliers = [
        MultiplierSpec("offset", one, 1, t),
        MultiplierSpec("pencil", gfull, inner.k, t),
    ]
    names = [f"x{i+1}" for i in range(inner.d)] + [f"y{q+1}" for q in range(inner.m)]
    return SosProgram(nv, outer.k, target, multipliers, with_mu=with_mu, var_names=names)


@dataclass
class BilinearDomain:
    """Semialgebraic domain for the bilinear relaxations: scalar and matrix
    inequality constraints plus an equality ideal, over nvars variables."""

    nvars: int
    scalar_ineqs: list = field(default_factory=list)  # (name, ScalarPoly)
    matrix_ineqs: list = field(default_factory=list)  # (name, MatPoly)
    equalities: list = field(default_factory=list)  # (name, ScalarPoly)
    var_names: tuple = ()


def add_archimedean_ball(domain, bound, var_indices=None, name="ball"):
    """Append bound - sum v_i^2 >= 0 over the given variables (all of them
    by default).  The caller asserts validity of the bound."""
    if bound <= 0:
        raise ContractViolation("Archimedean bound must be positive")
    idx = range(domain.nvars) if var_indices is None else var_indices
    poly = {(0,) * domain.nvars: float(bound)}
    for i in idx:
        e = [0] * domain.nvars
        e[i] = 2
        poly[tuple(e)] = -1.0
    domain.scalar_ineqs.append((name, poly))
    return domain


def build_bilinear_relaxation(domain, objective, t, with_mu=True):
    """Putinar/Hol-Scherer relaxation of order t for
    min objective over the domain: certifies objective - mu in the truncated
    module; equality constraints get free multipliers of degree 2t - deg(h).
    """
    nv = domain.nvars
    obj_deg = poly_degree(objective)
    if obj_deg > 2 * t:
        raise ContractViolation(
            f"objective degree {obj_deg} exceeds relaxation degree {2 * t}"
        )
    target = {m: np.array([[c]]) for m, c in objective.items()}
    multipliers = [
        MultiplierSpec("sos0", {(0,) * nv: np.ones((1, 1))}, 1, t)
    ]
    for name, poly in domain.scalar_ineqs:
        deg = poly_degree(poly)
        bdeg = t - (deg + 1) // 2
        if bdeg < 0:
            continue
        gp = {m: np.array([[c]]) for m, c in poly.items()}
        multipliers.append(MultiplierSpec(f"ineq:{name}", gp, 1, bdeg))
    for name, mp in domain.matrix_ineqs:
        deg = matpoly_degree(mp)
        bdeg = t - (deg + 1) // 2
        if bdeg < 0:
            continue
        g = next(iter(mp.values())).shape[0]
        multipliers.append(MultiplierSpec(f"mat:{name}", mp, g, bdeg))
    free_terms = []
    pivots = set()
    for name, poly in domain.equalities:
        deg = poly_degree(poly)
        fdeg = 2 * t - deg
        if fdeg < 0:
            continue
        free_terms.append(FreeTermSpec(f"eq:{name}", poly, fdeg))
        if deg <= 1:
            cands = [
                (abs(c), tuple(m).index(1))
                for m, c in poly.items()
                if sum(m) == 1 and abs(c) > 1e-12 and tuple(m).index(1) not in pivots
            ]
            if cands:
                best = max(cands, key=lambda t_: (t_[0], -t_[1]))
                pivots.add(best[1])
    names = domain.var_names or None
    return SosProgram(nv, 1, target, multipliers, free_terms,
                      with_mu=with_mu, var_names=names, drop_vars=pivots)
