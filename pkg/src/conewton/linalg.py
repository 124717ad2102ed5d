"""Dense linear-algebra kernels shared by the outer and inner Newton solvers."""

from __future__ import annotations

import warnings
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg


class LUFactors(NamedTuple):
    lu: np.ndarray
    row_perm: np.ndarray
    col_perm: np.ndarray
    max_pivot: float
    min_pivot: float


def lu_complete(a: np.ndarray) -> LUFactors:
    """LU factorization with complete pivoting, L stored below the diagonal.

    Complete pivoting is used so that a small trailing pivot is a reliable
    signal of rank deficiency, which the caller turns into a solve failure
    instead of returning a garbage direction.
    """
    u = np.array(a, dtype=float, copy=True)
    n = u.shape[0]
    if u.shape[0] != u.shape[1]:
        raise ValueError("lu_complete expects a square matrix")
    rp = np.arange(n)
    cp = np.arange(n)
    for k in range(n):
        sub = np.abs(u[k:, k:])
        flat = int(np.argmax(sub))
        i = k + flat // (n - k)
        j = k + flat % (n - k)
        if u[i, j] == 0.0:
            break  # remaining block is exactly zero
        if i != k:
            u[[k, i], :] = u[[i, k], :]
            rp[[k, i]] = rp[[i, k]]
        if j != k:
            u[:, [k, j]] = u[:, [j, k]]
            cp[[k, j]] = cp[[j, k]]
        u[k + 1:, k] /= u[k, k]
        if k + 1 < n:
            u[k + 1:, k + 1:] -= np.outer(u[k + 1:, k], u[k, k + 1:])
    piv = np.abs(np.diag(u))
    mx = float(piv.max()) if n else 0.0
    mn = float(piv.min()) if n else 0.0
    return LUFactors(u, rp, cp, mx, mn)


def lu_is_singular(f: LUFactors, pivot_rel: float) -> bool:
    if f.max_pivot == 0.0:
        return True
    return f.min_pivot < pivot_rel * f.max_pivot


def lu_solve_factored(f: LUFactors, b: np.ndarray) -> np.ndarray:
    n = f.lu.shape[0]
    y = scipy.linalg.solve_triangular(f.lu, b[f.row_perm], lower=True,
                                      unit_diagonal=True, check_finite=False)
    z = scipy.linalg.solve_triangular(f.lu, y, lower=False, check_finite=False)
    x = np.empty(n)
    x[f.col_perm] = z
    return x


def solve_checked(a: np.ndarray, b: np.ndarray, pivot_rel: float,
                  residual_rel: float = 1e-10) -> tuple[Optional[np.ndarray], bool]:
    """Solve a x = b with singularity detection and one refinement pass.

    Returns (x, ok). ok is False when a trailing complete pivot falls below
    pivot_rel times the largest pivot, or when the refined residual still
    exceeds residual_rel relative to ||b||.

    A partial-pivot factorization screens the clear cases first (it is an
    order of magnitude cheaper); the complete-pivot criterion stays the
    authority whenever the partial pivots land within two decades of the
    threshold.
    """
    if a.shape[0] == 0:
        return np.zeros(0), True
    with warnings.catch_warnings():
        # an exactly-zero pivot is an expected outcome here, not a warning
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    dmax = float(diag.max())
    ratio = float(diag.min()) / dmax if dmax > 0.0 else 0.0
    if ratio < 0.1 * pivot_rel:
        return None, False
    if ratio < 10.0 * pivot_rel:
        f = lu_complete(a)
        if lu_is_singular(f, pivot_rel):
            return None, False
        def solve(rhs):
            return lu_solve_factored(f, rhs)
    else:
        def solve(rhs):
            return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    x = solve(b)
    r = b - a @ x
    x += solve(r)
    bnorm = float(np.linalg.norm(b))
    if bnorm > 0.0:
        rel = float(np.linalg.norm(b - a @ x)) / bnorm
        if not np.isfinite(rel) or rel > residual_rel:
            return None, False
    return x, True


def solve_spd(b_mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive definite system via Cholesky, refined once."""
    if b_mat.shape[0] == 0:
        return np.zeros(0)
    c, low = scipy.linalg.cho_factor(b_mat, check_finite=False)
    x = scipy.linalg.cho_solve((c, low), rhs, check_finite=False)
    r = rhs - b_mat @ x
    x += scipy.linalg.cho_solve((c, low), r, check_finite=False)
    return x


def lstsq_minnorm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solve, used when a factorization reports
    rank deficiency but a pseudo-inverse action is still well defined."""
    x, _, _, _ = scipy.linalg.lstsq(a, b, check_finite=False, lapack_driver="gelsd")
    return x
