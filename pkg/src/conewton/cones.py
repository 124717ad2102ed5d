"""Closed convex cones: descriptors, projections, and Clarke generalized Jacobians.

Every cone K comes with four operations:

    project(K, y)             Euclidean projection onto K
    clarke_element(K, y)      one element V of the Clarke Jacobian of the projection
    project_dual(K, y)        projection onto the dual cone K* = y + project(K, -y)
    clarke_element_dual(K, y) I - clarke_element(K, -y)

The Clarke element returned at a kink is a fixed, documented selection so that
repeated evaluations are bit-identical.  Selections: nonnegative orthant entries
at zero get derivative 0; second-order and circular cones on their boundary (and
at the origin) take the limit from the cone interior; the matrix cone uses the
spectral divided-difference formula with 0/0 entries set to 0.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

_SQRT2 = math.sqrt(2.0)

_SIMPLICIAL_BASE_KINDS = ("orthant", "soc", "psd", "product")


class Cone:
    """Descriptor for a closed convex cone living in R^dim.

    Use the module-level factories (zero, free, nonneg_orthant, second_order,
    circular, psd, product, simplicial) instead of the constructor.
    """

    __slots__ = ("kind", "dim", "tau", "omega", "order", "parts", "mat", "base")

    def __init__(self, kind: str, dim: int, *, tau: float = 1.0,
                 omega: float = 0.0, order: int = 0,
                 parts: Sequence["Cone"] = (),
                 mat: Optional[np.ndarray] = None,
                 base: Optional["Cone"] = None):
        if dim < 1:
            raise ValueError("cone dimension must be at least 1")
        self.kind = kind
        self.dim = dim
        self.tau = tau
        self.omega = omega
        self.order = order
        self.parts = tuple(parts)
        self.mat = mat
        self.base = base

    def __repr__(self) -> str:
        if self.kind == "circular":
            return f"Cone(circular, dim={self.dim}, omega={self.omega:.6g})"
        if self.kind == "psd":
            return f"Cone(psd, order={self.order})"
        if self.kind == "product":
            return f"Cone(product, {list(self.parts)})"
        if self.kind == "simplicial":
            return f"Cone(simplicial, {self.mat.shape}, base={self.base})"
        return f"Cone({self.kind}, dim={self.dim})"


def zero(dim: int) -> Cone:
    """The trivial cone {0} in R^dim; its dual is all of R^dim."""
    return Cone("zero", dim)


def free(dim: int) -> Cone:
    """All of R^dim; its dual is {0}."""
    return Cone("free", dim)


def nonneg_orthant(dim: int) -> Cone:
    return Cone("orthant", dim)


def second_order(dim: int) -> Cone:
    """The cone of (t, u) with ||u|| <= t.  dim = 1 degenerates to the half-line."""
    return Cone("soc", dim, tau=1.0)


def circular(dim: int, omega: float) -> Cone:
    """The cone of (t, u) with ||u|| <= t * tan(omega), 0 < omega < pi/2."""
    if dim < 2:
        raise ValueError("circular cone needs dim >= 2")
    if not 0.0 < omega < 0.5 * math.pi:
        raise ValueError("half-aperture angle must lie strictly between 0 and pi/2")
    tau = math.tan(omega)
    if abs(tau - 1.0) <= 4 * np.finfo(float).eps:
        tau = 1.0  # omega = pi/4 must reproduce the second-order cone exactly
    return Cone("circular", dim, tau=tau, omega=omega)


def psd(order: int) -> Cone:
    """Symmetric positive semidefinite matrices of the given order, stored in
    scaled vector form (off-diagonals times sqrt(2)) so the ambient inner
    product equals the trace inner product."""
    if order < 1:
        raise ValueError("matrix order must be at least 1")
    return Cone("psd", order * (order + 1) // 2, order=order)


def product(*parts: Cone) -> Cone:
    if not parts:
        raise ValueError("product cone needs at least one factor")
    return Cone("product", sum(p.dim for p in parts), parts=parts)


def simplicial(mat: np.ndarray, base: Cone) -> Cone:
    """The image M K of a base cone K under a linear map M.

    The base must be built from orthant, second-order, and matrix factors;
    rank-deficient M is accepted (projections remain well defined), although
    the image is then only guaranteed closed under extra conditions reported
    by simplicial.closedness_diagnostic.
    """
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2:
        raise ValueError("simplicial cone map must be a matrix")
    if m.shape[1] != base.dim:
        raise ValueError("map columns must match the base cone dimension")
    _check_simplicial_base(base)
    return Cone("simplicial", m.shape[0], mat=m, base=base)


def _check_simplicial_base(base: Cone) -> None:
    if base.kind == "product":
        for p in base.parts:
            _check_simplicial_base(p)
        return
    if base.kind not in _SIMPLICIAL_BASE_KINDS:
        raise ValueError(
            f"simplicial base must combine orthant/second-order/psd factors, got {base.kind}")


# ---------------------------------------------------------------------------
# symmetric-matrix vectorization

def svec_dim(order: int) -> int:
    return order * (order + 1) // 2


def svec(s: np.ndarray) -> np.ndarray:
    """Stack the upper triangle of a symmetric matrix, off-diagonals scaled by
    sqrt(2), so that <svec(A), svec(B)> = trace(A B)."""
    n = s.shape[0]
    iu, ju = np.triu_indices(n)
    v = s[iu, ju].copy()
    v[iu != ju] *= _SQRT2
    return v


def smat(v: np.ndarray) -> np.ndarray:
    n = int(round((math.sqrt(8 * v.size + 1) - 1) / 2))
    if svec_dim(n) != v.size:
        raise ValueError("vector length is not a triangular number")
    s = np.zeros((n, n))
    iu, ju = np.triu_indices(n)
    w = v.copy()
    w[iu != ju] /= _SQRT2
    s[iu, ju] = w
    s[ju, iu] = w
    return s


_SYM_BASIS_CACHE: dict[int, np.ndarray] = {}


def _sym_basis(order: int) -> np.ndarray:
    """Orthonormal basis of symmetric matrices as a (k, n, n) stack, aligned
    with the svec coordinate order."""
    b = _SYM_BASIS_CACHE.get(order)
    if b is None:
        k = svec_dim(order)
        b = np.zeros((k, order, order))
        idx = 0
        for i in range(order):
            for j in range(i, order):
                if i == j:
                    b[idx, i, i] = 1.0
                else:
                    b[idx, i, j] = b[idx, j, i] = 1.0 / _SQRT2
                idx += 1
        _SYM_BASIS_CACHE[order] = b
    return b


# ---------------------------------------------------------------------------
# projections

def project(cone: Cone, y: np.ndarray) -> np.ndarray:
    y = _as_vec(cone, y)
    if cone.kind == "zero":
        return np.zeros_like(y)
    if cone.kind == "free":
        return y.copy()
    if cone.kind == "orthant":
        return np.maximum(y, 0.0)
    if cone.kind in ("soc", "circular"):
        return _project_circ(y, cone.tau)
    if cone.kind == "psd":
        return _project_psd(y)
    if cone.kind == "product":
        return np.concatenate([project(p, blk) for p, blk in _split(cone, y)])
    if cone.kind == "simplicial":
        from . import simplicial as _simp
        return _simp.simplicial_project(cone.mat, cone.base, y).p
    raise ValueError(f"unknown cone kind {cone.kind}")


def clarke_element(cone: Cone, y: np.ndarray) -> np.ndarray:
    """One element of the Clarke Jacobian of the projection at y, as a dense
    symmetric dim x dim matrix with eigenvalues in [0, 1]."""
    y = _as_vec(cone, y)
    if cone.kind == "zero":
        return np.zeros((cone.dim, cone.dim))
    if cone.kind == "free":
        return np.eye(cone.dim)
    if cone.kind == "orthant":
        return np.diag((y > 0.0).astype(float))
    if cone.kind in ("soc", "circular"):
        return _clarke_circ(y, cone.tau)
    if cone.kind == "psd":
        return _clarke_psd(y, cone.order)
    if cone.kind == "product":
        blocks = [clarke_element(p, blk) for p, blk in _split(cone, y)]
        out = np.zeros((cone.dim, cone.dim))
        off = 0
        for b in blocks:
            k = b.shape[0]
            out[off:off + k, off:off + k] = b
            off += k
        return out
    if cone.kind == "simplicial":
        from . import simplicial as _simp
        return _simp.simplicial_clarke(cone.mat, cone.base, y)
    raise ValueError(f"unknown cone kind {cone.kind}")


def project_dual(cone: Cone, y: np.ndarray) -> np.ndarray:
    """Projection onto the dual cone through the Moreau decomposition."""
    y = _as_vec(cone, y)
    return y + project(cone, -y)


def clarke_element_dual(cone: Cone, y: np.ndarray) -> np.ndarray:
    y = _as_vec(cone, y)
    return np.eye(cone.dim) - clarke_element(cone, -y)


def _as_vec(cone: Cone, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (cone.dim,):
        raise ValueError(f"expected a vector of length {cone.dim}, got shape {y.shape}")
    return y


def _split(cone: Cone, y: np.ndarray):
    off = 0
    for p in cone.parts:
        yield p, y[off:off + p.dim]
        off += p.dim


# -- second-order / circular family.  tau = tan(omega); tau = 1 is the
#    self-dual second-order cone.

def _project_circ(y: np.ndarray, tau: float) -> np.ndarray:
    t, u = y[0], y[1:]
    s = float(np.linalg.norm(u))
    if s <= t * tau:
        return y.copy()
    if tau * s <= -t:
        return np.zeros_like(y)
    # nearest boundary ray: minimize over points r * (1, tau * u/s), r >= 0
    r = (t + tau * s) / (1.0 + tau * tau)
    out = np.empty_like(y)
    out[0] = r
    out[1:] = (tau * r / s) * u
    return out


def _clarke_circ(y: np.ndarray, tau: float) -> np.ndarray:
    n = y.size
    t, u = y[0], y[1:]
    s = float(np.linalg.norm(u))
    if s <= t * tau:
        return np.eye(n)  # interior-side limit, also used on the boundary
    if tau * s <= -t:
        return np.zeros((n, n))
    w = np.empty(n)
    w[0] = 1.0
    w[1:] = (tau / s) * u
    v = np.outer(w, w) / (1.0 + tau * tau)
    r = (t + tau * s) / (1.0 + tau * tau)
    c = tau * r / s
    ubar = u / s
    v[1:, 1:] += c * (np.eye(n - 1) - np.outer(ubar, ubar))
    return v


# -- matrix cone in scaled vector coordinates

def _project_psd(v: np.ndarray) -> np.ndarray:
    x = smat(v)
    w, q = np.linalg.eigh(x)
    wp = np.maximum(w, 0.0)
    return svec((q * wp) @ q.T)


def _clarke_psd(v: np.ndarray, order: int) -> np.ndarray:
    x = smat(v)
    w, q = np.linalg.eigh(x)
    wp = np.maximum(w, 0.0)
    d = w[:, None] - w[None, :]
    num = wp[:, None] - wp[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(d != 0.0, num / np.where(d != 0.0, d, 1.0), 0.0)
    same = d == 0.0
    pos = np.broadcast_to((w > 0.0).astype(float)[:, None], same.shape)
    omega[same] = pos[same]
    basis = _sym_basis(order)
    mid = np.einsum("ia,kij,jb->kab", q, basis, q, optimize=True)
    mid *= omega
    back = np.einsum("ia,kab,jb->kij", q, mid, q, optimize=True)
    k = svec_dim(order)
    iu, ju = np.triu_indices(order)
    cols = back[:, iu, ju]
    cols[:, iu != ju] *= _SQRT2
    vmat = cols.T.reshape(k, k)
    return 0.5 * (vmat + vmat.T)
