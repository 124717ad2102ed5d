"""Benchmark problem families: generators, builders, and starting points."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cones, ncp
from .cones import Cone, smat, svec, svec_dim


# ---------------------------------------------------------------------------
# circular-cone linear programs:  min c.x  s.t.  A x = b,  x in circ(n, omega)

@dataclass
class CircularConeInstance:
    n: int
    m: int
    omega: float
    seed: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    x_hat: np.ndarray  # strictly feasible primal point used to build b


def generate_circular(n: int, m: int, omega: float, seed: int) -> CircularConeInstance:
    """Random strictly-feasible instance.

    Rows of A are orthonormalized; b comes from an interior point x_hat with
    ||u|| = tan(omega)/2; c = A^T y0 + s with s strictly interior to the dual
    cone, so primal and dual are both strictly feasible and a KKT point exists.
    """
    if m >= n:
        raise ValueError("need fewer equality rows than variables")
    rng = np.random.default_rng([seed, 0])
    tau = math.tan(omega)
    a_raw = rng.standard_normal((m, n))
    q, _ = np.linalg.qr(a_raw.T)
    a = np.ascontiguousarray(q.T)
    u = rng.standard_normal(n - 1)
    u *= 0.5 * tau / np.linalg.norm(u)
    x_hat = np.concatenate([[1.0], u])
    b = a @ x_hat
    y0 = rng.standard_normal(m)
    us = rng.standard_normal(n - 1)
    us *= 0.5 / (tau * np.linalg.norm(us))  # half of cot(omega)
    s = np.concatenate([[1.0], us])
    c = a.T @ y0 + s
    return CircularConeInstance(n=n, m=m, omega=omega, seed=seed,
                                a=a, b=b, c=c, x_hat=x_hat)


def build_circular(inst: CircularConeInstance) -> ncp.NcpProblem:
    """Reduced residual system in (y, sigma) for the circular-cone program:

        c - A^T sigma + y - P(y) = 0,   A P(y) - b = 0,   P = proj onto the cone.
    """
    base = _circular_base_problem(inst)
    reduced = ncp.reduce_double_cone(base, cones.circular(inst.n, inst.omega))
    reduced.meta["instance"] = inst
    return reduced


def build_circular_direct(inst: CircularConeInstance) -> ncp.NcpProblem:
    """Unreduced formulation with g(x) = (x, A x - b) in circ x {0}.

    Used to evaluate original-space KKT certificates and the round trip
    lam = sigma - g(x) after a reduced solve.
    """
    n, m = inst.n, inst.m
    a, b, c = inst.a, inst.b, inst.c
    kcone = cones.product(cones.circular(n, inst.omega), cones.zero(m))
    gmat = np.vstack([np.eye(n), a])

    prob = ncp.NcpProblem(
        x_dim=n, cone=kcone,
        f_eval=lambda x: float(c @ x),
        grad_f=lambda x: c.copy(),
        hess_f=lambda x: np.zeros((n, n)),
        g_eval=lambda x: np.concatenate([x, a @ x - b]),
        dg_apply=lambda x, dx: gmat @ dx,
        dg_adjoint=lambda x, w: gmat.T @ w,
        d2g_adjoint=lambda x, w: np.zeros((n, n)),
        dg_matrix=lambda x: gmat,
        dg_adjoint_matrix=lambda x: gmat.T,
        name="circular-lp-direct")
    prob.meta["instance"] = inst
    return prob


def _circular_base_problem(inst: CircularConeInstance) -> ncp.NcpProblem:
    n, m = inst.n, inst.m
    a, b, c = inst.a, inst.b, inst.c
    return ncp.NcpProblem(
        x_dim=n, cone=cones.zero(m),
        f_eval=lambda x: float(c @ x),
        grad_f=lambda x: c.copy(),
        hess_f=lambda x: np.zeros((n, n)),
        g_eval=lambda x: a @ x - b,
        dg_apply=lambda x, dx: a @ dx,
        dg_adjoint=lambda x, w: a.T @ w,
        d2g_adjoint=lambda x, w: np.zeros((n, n)),
        dg_matrix=lambda x: a,
        dg_adjoint_matrix=lambda x: a.T,
        name="circular-lp")


def circular_round_trip(inst: CircularConeInstance, y: np.ndarray,
                        sigma: np.ndarray):
    """Map a reduced solution (y, sigma) back to original variables.

    Returns (x, mu, sigma, cert, embedded_h_norm) where mu is the cone
    multiplier, cert the KKT certificate of the unreduced problem, and
    embedded_h_norm the residual of the unreduced system at the embedded
    multiplier lam = sigma_full - g(x).
    """
    ccone = cones.circular(inst.n, inst.omega)
    x = cones.project(ccone, y)
    mu = x - y  # = -proj onto the polar, lives in the dual cone
    direct = build_circular_direct(inst)
    sigma_full = np.concatenate([mu, sigma])
    lam = sigma_full - direct.g_eval(x)
    h_opt, h_feas = ncp.residual_H(direct, x, lam)
    hn = float(np.linalg.norm(np.concatenate([h_opt, h_feas])))
    _, _, cert = ncp.recover_kkt(direct, x, lam)
    return x, mu, sigma, cert, hn


# ---------------------------------------------------------------------------
# starting points

def starting_point(kind: str, seed: int, x_dim: int, m: int,
                   primal_cone: Cone | None = None):
    """Named starts used by the benchmarks.

    SP0 all zeros; SP1 a strictly interior point of the primal cone with zero
    multiplier; SP2 the first unit vector with an all-ones multiplier; SP3
    uniform [0,1) entries from the given seed.
    """
    if kind == "SP0":
        return np.zeros(x_dim), np.zeros(m)
    if kind == "SP1":
        if primal_cone is None:
            raise ValueError("SP1 needs a primal cone; this problem has none")
        return interior_point(primal_cone), np.zeros(m)
    if kind == "SP2":
        x = np.zeros(x_dim)
        x[0] = 1.0
        return x, np.ones(m)
    if kind == "SP3":
        rng = np.random.default_rng([seed, 3])
        return rng.random(x_dim), rng.random(m)
    raise ValueError(f"unknown starting point {kind!r}")


def interior_point(cone: Cone) -> np.ndarray:
    """A canonical strictly interior point, when the cone has interior."""
    if cone.kind == "orthant":
        return np.ones(cone.dim)
    if cone.kind in ("soc", "circular"):
        x = np.zeros(cone.dim)
        x[0] = 1.0
        return x
    if cone.kind == "psd":
        return svec(np.eye(cone.order))
    if cone.kind == "free":
        return np.zeros(cone.dim)
    if cone.kind == "product":
        return np.concatenate([interior_point(p) for p in cone.parts])
    raise ValueError(f"no canonical interior point for cone kind {cone.kind}")


# ---------------------------------------------------------------------------
# identity-constrained quadratic programs:  min x.Q x / 2 + q.x  s.t.  x in K

def build_identity_qp(q_mat: np.ndarray, q_vec: np.ndarray,
                      kcone: Cone) -> ncp.NcpProblem:
    q_mat = np.asarray(q_mat, dtype=float)
    q_vec = np.asarray(q_vec, dtype=float)
    n = q_vec.size
    if q_mat.shape != (n, n) or kcone.dim != n:
        raise ValueError("inconsistent quadratic program dimensions")
    eye = np.eye(n)
    prob = ncp.NcpProblem(
        x_dim=n, cone=kcone,
        f_eval=lambda x: 0.5 * float(x @ q_mat @ x) + float(q_vec @ x),
        grad_f=lambda x: q_mat @ x + q_vec,
        hess_f=lambda x: q_mat,
        g_eval=lambda x: x.copy(),
        dg_apply=lambda x, dx: dx.copy(),
        dg_adjoint=lambda x, w: w.copy(),
        d2g_adjoint=lambda x, w: np.zeros((n, n)),
        dg_matrix=lambda x: eye,
        dg_adjoint_matrix=lambda x: eye,
        name="identity-qp")
    prob.meta["contraction_certified"] = contraction_certified(q_mat)
    return prob


def contraction_certified(q_mat: np.ndarray) -> bool:
    """True when ||I - Q||_2 < 1, which makes the reduced fixed-point map a
    contraction and the KKT point unique."""
    n = q_mat.shape[0]
    return float(np.linalg.norm(np.eye(n) - q_mat, 2)) < 1.0


# ---------------------------------------------------------------------------
# escape test problem: a two-dimensional second-order-cone quadratic program
# together with an iterate that is stationary for theta but not strongly
# stationary, so the solver must take a feasibility escape step.

def escape_instance():
    """Returns (problem, x0, lam0) with grad theta = 0 exactly at (x0, lam0)
    while the feasibility part of the gradient stays away from zero, so the
    solver's only usable move is the feasibility escape step.

    Construction: mu0 = (0, -2) projects onto the boundary point P = (1, -1)
    with the rank-one Clarke element V = [[1,-1],[-1,1]]/2.  Choosing the
    optimality residual v = t (1, 1) puts it in Ker(V) and in Ker(A), which
    kills the mu and sigma gradient blocks; the x block collapses to the
    scalar condition t + (x1 - 1) + (A x0 - b) = 0 because Q v, the first
    feasibility block, and A^T all align with (1, -1).  An indefinite
    Q = diag(1, -1) is what makes Q v flip onto that axis; with a linear or
    convex-definite objective the full gradient could not vanish here.
    """
    rt2 = math.sqrt(2.0)
    t = 1.0 / rt2
    q_mat = np.diag([1.0, -1.0])
    a = np.array([[1.0, -1.0]])
    b = np.array([1.0])
    x1 = (3.0 + b[0] - t) / 3.0
    x0 = np.array([x1, 2.0 - x1])
    mu0 = np.array([0.0, -2.0])
    sig0 = 0.5
    v = np.array([t, t])
    # grad f(x0) must equal v + proj(mu0) + A^T sig0
    q_vec = v - q_mat @ x0 + np.array([1.0, -1.0]) * (1.0 + sig0)

    kcone = cones.product(cones.second_order(2), cones.zero(1))
    gmat = np.vstack([np.eye(2), a])
    prob = ncp.NcpProblem(
        x_dim=2, cone=kcone,
        f_eval=lambda x: 0.5 * float(x @ q_mat @ x) + float(q_vec @ x),
        grad_f=lambda x: q_mat @ x + q_vec,
        hess_f=lambda x: q_mat,
        g_eval=lambda x: np.concatenate([x, a @ x - b]),
        dg_apply=lambda x, dx: gmat @ dx,
        dg_adjoint=lambda x, w: gmat.T @ w,
        d2g_adjoint=lambda x, w: np.zeros((2, 2)),
        dg_matrix=lambda x: gmat,
        dg_adjoint_matrix=lambda x: gmat.T,
        name="escape-qp")
    lam0 = np.concatenate([mu0, [sig0]])
    return prob, x0, lam0


# ---------------------------------------------------------------------------
# low-rank matrix completion
#
#   min ||mask . X - G||^2 / 2
#   s.t. X - Y X = 0, Y^2 - Y = 0 (symmetric, scaled-vector form),
#        trace(Y) <= r_max
#
# Variables are w = (vec X, svec Y); the constraint cone is
# {0}^(n^2) x {0}^(n(n+1)/2) x R_+.

@dataclass
class CompletionInstance:
    n: int
    p: float
    r_max: int
    seed: int
    mask: np.ndarray
    g_obs: np.ndarray
    planted: np.ndarray


def generate_completion(n: int, p: float, r_max: int, seed: int) -> CompletionInstance:
    """Planted rank-r_max matrix observed on an exact-count random mask."""
    rng = np.random.default_rng([seed, 0])
    left = rng.standard_normal((n, r_max))
    right = rng.standard_normal((n, r_max))
    full = left @ right.T
    count = int(round(p * n * n))
    mask = (rng.random((n, n)) < p).astype(float)
    have = int(mask.sum())
    flat = mask.ravel()
    if have > count:
        ones = np.flatnonzero(flat == 1.0)
        drop = rng.permutation(ones)[:have - count]
        flat[drop] = 0.0
    elif have < count:
        zeros = np.flatnonzero(flat == 0.0)
        add = rng.permutation(zeros)[:count - have]
        flat[add] = 1.0
    mask = flat.reshape(n, n)
    g_obs = mask * full
    return CompletionInstance(n=n, p=p, r_max=r_max, seed=seed,
                              mask=mask, g_obs=g_obs, planted=full)


def _unpack(n: int, w: np.ndarray):
    x = w[:n * n].reshape(n, n)
    y = smat(w[n * n:])
    return x, y


def _pack(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.concatenate([x.ravel(), svec(y)])


def build_lowrank(inst: CompletionInstance) -> ncp.NcpProblem:
    n = inst.n
    nsym = svec_dim(n)
    x_dim = n * n + nsym
    m = n * n + nsym + 1
    mask, g_obs, r_max = inst.mask, inst.g_obs, float(inst.r_max)
    eye = np.eye(n)
    basis = cones._sym_basis(n)
    svec_eye = svec(eye)
    hess = np.zeros((x_dim, x_dim))
    hess[:n * n, :n * n] = np.diag(mask.ravel())
    kcone = cones.product(cones.zero(n * n), cones.zero(nsym),
                          cones.nonneg_orthant(1))

    def f_eval(w):
        x, _ = _unpack(n, w)
        r = mask * x - g_obs
        return 0.5 * float(np.sum(r * r))

    def grad_f(w):
        x, _ = _unpack(n, w)
        return np.concatenate([(mask * x - g_obs).ravel(), np.zeros(nsym)])

    def g_eval(w):
        x, y = _unpack(n, w)
        return np.concatenate([(x - y @ x).ravel(),
                               svec(y @ y - y),
                               [r_max - np.trace(y)]])

    def dg_apply(w, dw):
        x, y = _unpack(n, w)
        dx, dy = _unpack(n, dw)
        return np.concatenate([(dx - y @ dx - dy @ x).ravel(),
                               svec(dy @ y + y @ dy - dy),
                               [-np.trace(dy)]])

    def dg_adjoint(w, wv):
        x, y = _unpack(n, w)
        w1 = wv[:n * n].reshape(n, n)
        w2 = smat(wv[n * n:n * n + nsym])
        w3 = wv[-1]
        adj_x = w1 - y @ w1
        raw = -w1 @ x.T
        adj_y = 0.5 * (raw + raw.T) + w2 @ y + y @ w2 - w2 - w3 * eye
        return np.concatenate([adj_x.ravel(), svec(adj_y)])

    def d2g_adjoint(w, wv):
        x, _ = _unpack(n, w)
        w1 = wv[:n * n].reshape(n, n)
        w2 = smat(wv[n * n:n * n + nsym])
        out = np.zeros((x_dim, x_dim))
        # d(adj_x)/dY applied to each symmetric basis element: -B W1
        xy = -np.einsum("kab,bc->kac", basis, w1)
        out[:n * n, n * n:] = xy.reshape(nsym, n * n).T
        out[n * n:, :n * n] = out[:n * n, n * n:].T
        yy = np.einsum("ab,kbc->kac", w2, basis) + np.einsum("kab,bc->kac", basis, w2)
        out[n * n:, n * n:] = _svec_stack(yy, n).T
        return out

    def dg_matrix(w):
        x, y = _unpack(n, w)
        g = np.zeros((m, x_dim))
        g[:n * n, :n * n] = np.kron(eye - y, eye)
        # d g1 / dY: -(dY) X, columns over the symmetric basis
        dy_x = -np.einsum("kab,bc->kac", basis, x)
        g[:n * n, n * n:] = dy_x.reshape(nsym, n * n).T
        dy_sym = (np.einsum("kab,bc->kac", basis, y)
                  + np.einsum("ab,kbc->kac", y, basis) - basis)
        g[n * n:n * n + nsym, n * n:] = _svec_stack(dy_sym, n).T
        g[-1, n * n:] = -svec_eye
        return g

    prob = ncp.NcpProblem(
        x_dim=x_dim, cone=kcone,
        f_eval=f_eval, grad_f=grad_f, hess_f=lambda w: hess,
        g_eval=g_eval, dg_apply=dg_apply, dg_adjoint=dg_adjoint,
        d2g_adjoint=d2g_adjoint, dg_matrix=dg_matrix,
        name="lowrank-completion")
    prob.meta["instance"] = inst
    return prob


def _svec_stack(mats: np.ndarray, n: int) -> np.ndarray:
    """svec applied along the first axis of a (k, n, n) stack -> (k, nsym)."""
    iu, ju = np.triu_indices(n)
    out = mats[:, iu, ju].copy()
    out[:, iu != ju] *= math.sqrt(2.0)
    return out


def completion_start(inst: CompletionInstance, strategy: str, draw: int = 0,
                     coeff: float = 0.1):
    """Initial (w0, lam0) for a completion instance.

    'rowrank1' places the draw-th largest-norm observed row into a rank-one
    matrix with the matching coordinate projector; 'perturb' adds seeded
    noise of magnitude coeff (1 - p) ||G|| / n to G and projects onto the
    leading r_max-dimensional column space.  The perturb strategy samples a
    fresh noise realization per draw index so a batch can explore the basins
    of several stationary points; draw 0 keeps the historical stream.
    Raising coeff above the 0.1 default widens the sweep, which rescues
    instances whose nearby basins all stall below the solve tolerance.
    """
    n, r_max = inst.n, inst.r_max
    if strategy == "rowrank1":
        order = np.argsort(-np.linalg.norm(inst.g_obs, axis=1), kind="stable")
        i = int(order[draw])
        x0 = np.zeros((n, n))
        x0[i, :] = inst.g_obs[i, :]
        y0 = np.zeros((n, n))
        y0[i, i] = 1.0
    elif strategy == "perturb":
        seq = [inst.seed, 7] if draw == 0 else [inst.seed, 7, draw]
        rng = np.random.default_rng(seq)
        mag = coeff * (1.0 - inst.p) * np.linalg.norm(inst.g_obs) / n
        x0 = inst.g_obs + mag * rng.standard_normal((n, n))
        u, _, _ = np.linalg.svd(x0)
        ur = u[:, :r_max]
        y0 = ur @ ur.T
        x0 = y0 @ x0
    else:
        raise ValueError(f"unknown start strategy {strategy!r}")
    m = n * n + svec_dim(n) + 1
    return _pack(x0, y0), np.zeros(m)


def generator_metadata(kind: str) -> dict:
    """Audit record of the instance constructions (they are this package's
    own; the benchmark sources leave generation details unspecified)."""
    if kind == "circular":
        return {
            "rows": "standard normal m by n, then row-orthonormalized by QR",
            "primal": "x_hat = (1, u) with ||u|| = tan(omega)/2; b = A x_hat",
            "dual": "c = A^T y0 + s, y0 standard normal, s = (1, u_s) with "
                    "||u_s|| = cot(omega)/2 strictly dual-interior",
            "seeding": "default_rng([seed, 0])",
        }
    if kind == "completion":
        return {
            "planted": "L R^T with L, R standard normal n by r_max",
            "mask": "iid Bernoulli(p) adjusted to exactly round(p n^2) ones",
            "observations": "mask * planted (no noise)",
            "seeding": "default_rng([seed, 0]); perturb start draw j uses "
                       "default_rng([seed, 7]) for j = 0 and "
                       "default_rng([seed, 7, j]) after",
        }
    raise ValueError(f"unknown generator kind {kind!r}")


def completion_objective(inst: CompletionInstance, w: np.ndarray) -> float:
    x = w[:inst.n * inst.n].reshape(inst.n, inst.n)
    r = inst.mask * x - inst.g_obs
    return 0.5 * float(np.sum(r * r))
