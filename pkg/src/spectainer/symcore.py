"""Dense symmetric-matrix linear algebra shared by all other modules.

Everything here operates on plain ``numpy`` arrays; :class:`SymMat` is a thin
validating wrapper used where matrices cross an API boundary (instance files,
certificates).  All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation, NumericalFailure

# Relative asymmetry above which construction is rejected instead of silently
# symmetrized; catches malformed instance files early.
ASYM_REJECT_TOL = 1e-9

DEFAULT_PSD_TOL = 1e-8


def as_sym_array(m, what="matrix"):
    """Coerce ``m`` (SymMat or array-like) to a float ndarray and check shape."""
    if isinstance(m, SymMat):
        return m.data
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"{what} must be square, got shape {a.shape}")
    return a


def symmetrize(m, what="matrix"):
    """Return (M + M^T)/2, rejecting inputs with relative asymmetry above
    ``ASYM_REJECT_TOL``."""
    a = as_sym_array(m, what)
    norm = np.linalg.norm(a)
    skew = np.linalg.norm(a - a.T)
    if skew > ASYM_REJECT_TOL * max(norm, 1e-300):
        raise ContractViolation(
            f"{what} is not symmetric: asymmetry {skew:.3e} exceeds "
            f"{ASYM_REJECT_TOL:.1e} * norm {norm:.3e}"
        )
    if skew == 0.0:
        return a
    return 0.5 * (a + a.T)


class SymMat:
    """Immutable real symmetric matrix.

    Construction symmetrizes via (M + M^T)/2 and rejects inputs whose
    asymmetry exceeds ``1e-9 * ||M||_F``.  Construction from exactly
    symmetric data is the identity.
    """

    __slots__ = ("data",)

    def __init__(self, entries):
        a = symmetrize(entries, "SymMat entries")
        if a.shape[0] < 1:
            raise ContractViolation("SymMat dimension must be >= 1")
        a = np.array(a, dtype=float)  # private copy
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    def __setattr__(self, name, value):
        raise AttributeError("SymMat is immutable")

    @property
    def n(self):
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.data.astype(dtype)
        return self.data

    def __eq__(self, other):
        if not isinstance(other, SymMat):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.all(self.data == other.data)
        )

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))

    def __repr__(self):
        return f"SymMat(n={self.n})"

    def tolist(self):
        return self.data.tolist()


def sym_eig(m):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(w, V)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvectors in the columns of ``V`` so that ``V @ diag(w) @ V.T``
    reconstructs the input.
    """
    a = symmetrize(m)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # non-convergence
        raise NumericalFailure(f"symmetric eigensolver failed: {exc}") from exc
    return w, v


def sym_eigvals(m):
    a = symmetrize(m)
    try:
        return np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"symmetric eigensolver failed: {exc}") from exc


def min_eigval(m):
    return float(sym_eigvals(m)[0])


def is_psd(m, tol=DEFAULT_PSD_TOL):
    """True iff lambda_min(M) >= -tol * (1 + ||M||_F)."""
    if tol < 0:
        raise ContractViolation("tol must be >= 0")
    a = as_sym_array(m)
    w = sym_eigvals(a)
    return bool(w[0] >= -tol * (1.0 + np.linalg.norm(a)))


def lth_scalar_product(m, n, l):
    """Blockwise Frobenius pairing of an (l*k x l*k) matrix with a (k x k) one.

    The first argument is read as an l x l grid of k x k blocks M_ij; the
    result is the l x l matrix with entries <M_ij, N>.  For psd inputs the
    result is psd; for l = 1 it reduces to the Euclidean inner product.
    """
    if l < 1:
        raise ContractViolation("l must be a positive integer")
    big = as_sym_array(m, "first argument")
    small = as_sym_array(n, "second argument")
    k = small.shape[0]
    if big.shape[0] != k * l:
        raise ContractViolation(
            f"size mismatch: expected {k * l} = k*l rows, got {big.shape[0]}"
        )
    blocks = big.reshape(l, k, l, k)
    out = np.einsum("iajb,ab->ij", blocks, small)
    return 0.5 * (out + out.T)


def kron(m, n):
    """Kronecker product of two symmetric matrices (psd x psd stays psd)."""
    return np.kron(as_sym_array(m), as_sym_array(n))


def nullspace_basis(m, tol):
    """Orthonormal basis of ker(M) for a rectangular matrix.

    The kernel dimension is the number of singular values below
    ``tol * sigma_max`` (plus any structurally missing ones).  Returns an
    (ncols x dim) array whose columns satisfy ||M v|| <= tol * ||M||.
    """
    if tol <= 0:
        raise ContractViolation("tol must be > 0")
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ContractViolation("expected a 2-d array")
    rows, cols = a.shape
    if rows == 0 or not np.any(a):
        return np.eye(cols)
    try:
        _, s, vt = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD failed: {exc}") from exc
    smax = s[0] if len(s) else 0.0
    rank = int(np.sum(s > tol * smax))
    return vt[rank:].T.copy()


def perfect_shuffle(k, l):
    """Index permutation between the two blockings of a (k*l x k*l) matrix.

    ``p = perfect_shuffle(k, l)`` satisfies: if C is blocked as a k x k grid
    of l x l blocks and Cp as an l x l grid of k x k blocks describing the
    same bilinear data, then ``C = Cp[np.ix_(p, p)]`` with
    ``p[i*l + u] = u*k + i``.
    """
    p = np.empty(k * l, dtype=int)
    for i in range(k):
        for u in range(l):
            p[i * l + u] = u * k + i
    return p
