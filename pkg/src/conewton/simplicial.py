"""Projection onto generalized simplicial cones M K.

The projection is recovered from the nonlinear equation

    (M^T M - I) P_K(z) + z = M^T x

whose solution z gives  proj_{MK}(x) = M P_K(z).  The equation is the
identity-case reduction of the projection program  min ||M w - x||^2 / 2,
w in K, so it is handed to the same semi-smooth Newton engine that solves
full conic programs; one engine serves both the outer and the inner loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import cones, linalg, ncp, solver
from .cones import Cone

GUARANTEED_CLOSED_TRIVIAL_KERNEL = "GuaranteedClosedTrivialKernel"
GUARANTEED_CLOSED_IMAGE_SPACE = "GuaranteedClosedImageSpace"
UNKNOWN = "Unknown"

INNER_TOL = 1e-12
INNER_MAXITER = 100


class ProjectionError(RuntimeError):
    """Inner Newton solve did not reach the requested residual."""

    def __init__(self, message: str, inner_residual: float, status: str):
        super().__init__(message)
        self.inner_residual = inner_residual
        self.status = status


@dataclass
class SimplicialProjectionResult:
    z_star: np.ndarray         # solution of the projection equation
    p: np.ndarray              # M @ project(base, z_star), the projection
    mz_gap: float              # || M z_star - p ||, zero only if z_star in K
    inner_residual: float
    inner_iterations: int
    warm_start_used: bool


def _projection_problem(mat: np.ndarray, base: Cone,
                        x: np.ndarray) -> ncp.NcpProblem:
    mtm = mat.T @ mat
    mtx = mat.T @ x

    prob = ncp.NcpProblem(
        x_dim=base.dim, cone=None,
        f_eval=lambda w: 0.5 * float(np.sum((mat @ w - x) ** 2)),
        grad_f=lambda w: mtm @ w - mtx,
        hess_f=lambda w: mtm,
        name="simplicial-projection")
    return ncp.reduce_double_cone(prob, base)


def simplicial_project(mat: np.ndarray, base: Cone, x: np.ndarray,
                       warm_start: Optional[np.ndarray] = None,
                       tol: float = INNER_TOL,
                       maxiter: int = INNER_MAXITER) -> SimplicialProjectionResult:
    """Project x onto M K by solving the projection equation.

    warm_start, when given, seeds the inner iteration with a previous z_star
    (useful along trajectories); the default start is M^T x.  Raises
    ProjectionError when the inner residual cannot be pushed below tol.
    """
    mat = np.asarray(mat, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape != (mat.shape[0],):
        raise ValueError("point dimension must match the map rows")
    reduced = _projection_problem(mat, base, x)
    z0 = np.asarray(warm_start, dtype=float) if warm_start is not None else mat.T @ x
    if z0.shape != (base.dim,):
        raise ValueError("warm start must live in the base-cone space")
    cfg = solver.SolverConfig(tol=tol, maxiter=maxiter)
    rep = solver.solve(reduced, z0, np.zeros(0), cfg)
    z, residual, iters = rep.x, rep.final_h_norm, rep.iterations
    if rep.status != solver.SOLVED:
        z, residual, extra = _descent_rescue(mat, base, x, reduced, rep.x,
                                             tol, cfg)
        iters += extra
        if residual > tol:
            raise ProjectionError(
                f"inner projection solve stopped with {rep.status} "
                f"at residual {residual:.3e}",
                residual, rep.status)
    z, residual = _polish(reduced, z, residual)
    pk = cones.project(base, z)
    p = mat @ pk
    gap = float(np.linalg.norm(mat @ z - p))
    return SimplicialProjectionResult(
        z_star=z, p=p, mz_gap=gap,
        inner_residual=residual,
        inner_iterations=iters,
        warm_start_used=warm_start is not None)


def _polish(reduced: ncp.NcpProblem, z: np.ndarray, residual: float):
    """Newton-polish a converged inner iterate onto its linear piece.

    The inner equation is piecewise smooth, so once the iterate sits inside
    a stable piece one full minimum-norm Newton step lands on the piece
    solution up to roundoff, gaining two or three digits over the stopping
    residual.  Steps that fail to reduce the residual are discarded, which
    keeps the routine safe on pieces where the Clarke element is singular.
    """
    for _ in range(2):
        if residual == 0.0:
            break
        it = ncp.make_iterate(reduced, z, np.zeros(0))
        z_new = z + linalg.lstsq_minnorm(it.jacobian, -it.h)
        r_new = ncp.make_iterate(reduced, z_new, np.zeros(0)).h_norm
        if not r_new < residual:
            break
        z, residual = z_new, r_new
    return z, residual


def _descent_rescue(mat: np.ndarray, base: Cone, x: np.ndarray,
                    reduced: ncp.NcpProblem, z_stalled: np.ndarray,
                    tol: float, cfg: solver.SolverConfig):
    """Globally convergent fallback for a stalled inner Newton run.

    The projection program min ||M w - x||^2 / 2 over the base cone is
    convex, so projected gradient steps with a 1/L step size converge from
    anywhere; Newton restarts are attempted periodically for the final
    digits.  The stalls this covers are kink jams: an iterate lands within
    machine epsilon of a projection kink and the one-sided Clarke element
    mispredicts every Armijo slope.
    """
    mtm = mat.T @ mat
    mtx = mat.T @ x
    eigs = np.linalg.eigvalsh(mtm)
    lip = float(eigs[-1]) if eigs.size else 1.0
    if lip <= 0.0:  # zero map: projection is 0, any z = mtx works
        return mtx.copy(), 0.0, 0
    step = 1.0 / lip
    w = cones.project(base, z_stalled)
    used = 0
    best_z, best_res = None, np.inf
    for k in range(1, 100001):
        w = cones.project(base, w - step * (mtm @ w - mtx))
        used += 1
        if k % 10 == 0 or k == 1:
            z = w - (mtm @ w - mtx)
            h, _ = ncp.residual_H(reduced, z, np.zeros(0))
            res = float(np.linalg.norm(h))
            if res < best_res:
                best_z, best_res = z, res
            if res <= tol:
                return z, res, used
        if k % 250 == 0:
            rep = solver.solve(reduced, best_z, np.zeros(0), cfg)
            used += rep.iterations
            if rep.status == solver.SOLVED:
                return rep.x, rep.final_h_norm, used
            if rep.final_h_norm < best_res:
                best_z, best_res = rep.x, rep.final_h_norm
    return best_z, best_res, used


def simplicial_clarke(mat: np.ndarray, base: Cone, x: np.ndarray,
                      result: Optional[SimplicialProjectionResult] = None) -> np.ndarray:
    """Clarke element of the M K projection at x.

    Differentiating the projection equation gives V = M W T^+ M^T with
    W a Clarke element of the base projection at z_star and
    T = (M^T M - I) W + I.  Kernel vectors k of T satisfy M W k = 0, so the
    pseudo-inverse action is well defined and V stays symmetric even for
    rank-deficient M.
    """
    mat = np.asarray(mat, dtype=float)
    if result is None:
        result = simplicial_project(mat, base, x)
    z = result.z_star
    w = cones.clarke_element(base, z)
    t = (mat.T @ mat - np.eye(base.dim)) @ w + np.eye(base.dim)
    rhs = mat.T
    # multi-column solve: factor once, fall back to minimum-norm on singularity
    f = linalg.lu_complete(t)
    if linalg.lu_is_singular(f, 1e-12):
        sol = linalg.lstsq_minnorm(t, rhs)
    else:
        sol = np.column_stack([linalg.lu_solve_factored(f, rhs[:, j])
                               for j in range(rhs.shape[1])])
        resid = rhs - t @ sol
        sol += np.column_stack([linalg.lu_solve_factored(f, resid[:, j])
                                for j in range(rhs.shape[1])])
    v = mat @ w @ sol
    return 0.5 * (v + v.T)


def dual_membership(mat: np.ndarray, base: Cone, z: np.ndarray,
                    tol: float = 1e-10) -> bool:
    """Test z in (M K)* for full-column-rank M via M^T z in K*.

    Rank deficiency invalidates that characterization, so it is rejected;
    use project_dual on the simplicial descriptor (Moreau) in that case.
    """
    mat = np.asarray(mat, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.linalg.matrix_rank(mat) < mat.shape[1]:
        raise ValueError(
            "dual membership via M^T z needs full column rank; "
            "for rank-deficient maps test through the Moreau decomposition "
            "(project_dual on the simplicial cone)")
    w = mat.T @ z
    dist = float(np.linalg.norm(w - cones.project_dual(base, w)))
    return dist <= tol * max(1.0, float(np.linalg.norm(w)))


def closedness_diagnostic(mat: np.ndarray, base: Cone, seed: int = 0) -> str:
    """Sufficient-condition check that M K is closed.

    Trivial kernel always implies closedness.  Otherwise a kernel direction
    interior to K implies M K equals the image of M, hence is closed; the
    search tries the kernel-basis centroid and 64 seeded sign combinations.
    Returns Unknown when neither condition is established (never a wrong
    'closed' verdict).
    """
    mat = np.asarray(mat, dtype=float)
    _, sv, vt = np.linalg.svd(mat)
    rank = int(np.sum(sv > sv[0] * max(mat.shape) * np.finfo(float).eps)) if sv.size else 0
    if rank == mat.shape[1]:
        return GUARANTEED_CLOSED_TRIVIAL_KERNEL
    null_basis = vt[rank:].T  # columns span Ker(M)
    k = null_basis.shape[1]
    candidates = [null_basis.mean(axis=1)]
    rng = np.random.default_rng([seed, 0x51])
    for _ in range(64):
        signs = rng.choice([-1.0, 1.0], size=k)
        candidates.append(null_basis @ signs)
    for w in candidates:
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            continue
        if _strictly_interior(base, w / nw):
            return GUARANTEED_CLOSED_IMAGE_SPACE
    return UNKNOWN


_INTERIOR_MARGIN = 1e-9


def _strictly_interior(cone: Cone, w: np.ndarray) -> bool:
    if cone.kind == "orthant":
        return bool(np.min(w) > _INTERIOR_MARGIN)
    if cone.kind in ("soc", "circular"):
        return cone.tau * w[0] - float(np.linalg.norm(w[1:])) > _INTERIOR_MARGIN
    if cone.kind == "psd":
        return float(np.linalg.eigvalsh(cones.smat(w))[0]) > _INTERIOR_MARGIN
    if cone.kind == "product":
        off = 0
        for part in cone.parts:
            if not _strictly_interior(part, w[off:off + part.dim]):
                return False
            off += part.dim
        return True
    return False
