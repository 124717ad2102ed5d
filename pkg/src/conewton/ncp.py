"""Residual formulation of nonlinear conic programs.

A program  min f(x)  s.t.  g(x) in K  is encoded by callbacks; its KKT points
are exactly the zeros of the residual map

    H(x, lam) = ( grad f(x) - Dg(x)^T P(lam),  g(x) - P(lam) + lam )

where P is the projection onto the dual cone K*.  The map is semi-smooth, and
one Clarke Jacobian element is assembled from a Clarke element of P.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import cones
from .cones import Cone


@dataclass
class NcpProblem:
    """Callback bundle describing one program.

    For a plain program, dg_adjoint must be the true adjoint of dg_apply and
    hess_f symmetric; systems produced by reduce_double_cone intentionally
    break that pairing (their Jacobian is the chain-rule Jacobian of the
    reduced residual, which is not symmetric in general), so consumers must
    always use the pair (dg_apply, dg_adjoint) as given.

    cone is the constraint cone K; None means the program is unconstrained
    and the residual degenerates to grad f(x) = 0.
    """

    x_dim: int
    cone: Optional[Cone]
    f_eval: Callable[[np.ndarray], float]
    grad_f: Callable[[np.ndarray], np.ndarray]
    hess_f: Callable[[np.ndarray], np.ndarray]
    g_eval: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dg_apply: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    dg_adjoint: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    d2g_adjoint: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    dg_matrix: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dg_adjoint_matrix: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.cone.dim if self.cone is not None else 0

    def constraint_matrix(self, x: np.ndarray) -> np.ndarray:
        """Dense matrix of dg_apply at x (m rows, x_dim columns)."""
        if self.dg_matrix is not None:
            return self.dg_matrix(x)
        cols = np.zeros((self.m, self.x_dim))
        e = np.zeros(self.x_dim)
        for j in range(self.x_dim):
            e[j] = 1.0
            cols[:, j] = self.dg_apply(x, e)
            e[j] = 0.0
        return cols

    def adjoint_matrix(self, x: np.ndarray) -> np.ndarray:
        """Dense matrix of dg_adjoint at x (x_dim rows, m columns)."""
        if self.dg_adjoint_matrix is not None:
            return self.dg_adjoint_matrix(x)
        cols = np.zeros((self.x_dim, self.m))
        e = np.zeros(self.m)
        for j in range(self.m):
            e[j] = 1.0
            cols[:, j] = self.dg_adjoint(x, e)
            e[j] = 0.0
        return cols


@dataclass
class KktCertificate:
    stationarity_norm: float
    primal_feas_gap: float
    dual_feas_gap: float
    complementarity: float

    def max_entry(self) -> float:
        return max(self.stationarity_norm, self.primal_feas_gap,
                   self.dual_feas_gap, self.complementarity)

    def passes(self, tol: float) -> bool:
        return self.max_entry() <= tol


class Iterate:
    """One point (x, lam) with the caches the solver needs.

    Eager: dual projection sigma, residual blocks, theta.  Lazy: the Clarke
    element of the dual projection, the Jacobian, and the merit gradients,
    which are only assembled when a step direction is requested.  The lazy
    pieces are computed once and frozen, so every consumer within an outer
    iteration sees the same Clarke element.
    """

    def __init__(self, problem: NcpProblem, x: np.ndarray, lam: np.ndarray):
        self.problem = problem
        self.x = np.asarray(x, dtype=float)
        self.lam = np.asarray(lam, dtype=float)
        if self.x.shape != (problem.x_dim,):
            raise ValueError("x has the wrong dimension")
        if self.lam.shape != (problem.m,):
            raise ValueError("multiplier has the wrong dimension")
        self.h_opt, self.h_feas = residual_H(problem, self.x, self.lam)
        if problem.m:
            self.sigma = cones.project_dual(problem.cone, self.lam)
        else:
            self.sigma = np.zeros(0)
        self.h = np.concatenate([self.h_opt, self.h_feas])
        self.h_norm = float(np.linalg.norm(self.h))
        self.theta = 0.5 * self.h_norm ** 2
        self.theta_feas = 0.5 * float(self.h_feas @ self.h_feas)
        self.theta_opt = 0.5 * float(self.h_opt @ self.h_opt)
        self._jac: Optional[np.ndarray] = None
        self._grad_theta: Optional[np.ndarray] = None
        self._grad_theta_opt: Optional[np.ndarray] = None
        self._grad_theta_feas: Optional[np.ndarray] = None

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.lam])

    @property
    def jacobian(self) -> np.ndarray:
        if self._jac is None:
            self._jac = jacobian_JH(self.problem, self)
        return self._jac

    @property
    def grad_theta(self) -> np.ndarray:
        if self._grad_theta is None:
            self._grad_theta = self.jacobian.T @ self.h
        return self._grad_theta

    @property
    def grad_theta_opt(self) -> np.ndarray:
        if self._grad_theta_opt is None:
            n = self.problem.x_dim
            self._grad_theta_opt = self.jacobian[:n, :].T @ self.h_opt
        return self._grad_theta_opt

    @property
    def grad_theta_feas(self) -> np.ndarray:
        if self._grad_theta_feas is None:
            n = self.problem.x_dim
            self._grad_theta_feas = self.jacobian[n:, :].T @ self.h_feas
        return self._grad_theta_feas


def make_iterate(problem: NcpProblem, x: np.ndarray, lam: np.ndarray) -> Iterate:
    return Iterate(problem, x, lam)


def residual_H(problem: NcpProblem, x: np.ndarray,
               lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Residual blocks (stationarity part, feasibility part) at (x, lam)."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if problem.m == 0:
        return problem.grad_f(x), np.zeros(0)
    sigma = cones.project_dual(problem.cone, lam)
    h_opt = problem.grad_f(x) - problem.dg_adjoint(x, sigma)
    h_feas = problem.g_eval(x) - sigma + lam
    return h_opt, h_feas


def jacobian_JH(problem: NcpProblem, iterate: Iterate) -> np.ndarray:
    """One Clarke Jacobian element of H at the iterate, dense.

    Blocks:  [ hess_f - d2g_adjoint   -(adjoint matrix) V ]
             [ constraint matrix       I - V              ]
    with V a Clarke element of the dual-cone projection at lam.
    """
    n, m = problem.x_dim, problem.m
    x = iterate.x
    if m == 0:
        return problem.hess_f(x)
    v_dual = cones.clarke_element_dual(problem.cone, iterate.lam)
    b11 = problem.hess_f(x) - problem.d2g_adjoint(x, iterate.sigma)
    g_app = problem.constraint_matrix(x)
    g_adj = problem.adjoint_matrix(x)
    jac = np.zeros((n + m, n + m))
    jac[:n, :n] = b11
    jac[:n, n:] = -g_adj @ v_dual
    jac[n:, :n] = g_app
    jac[n:, n:] = np.eye(m) - v_dual
    return jac


def merit_theta(iterate: Iterate) -> float:
    return iterate.theta


def grad_theta(problem: NcpProblem, iterate: Iterate) -> np.ndarray:
    return iterate.grad_theta


def split_residual(problem: NcpProblem, iterate: Iterate):
    """Blocks (h_opt, h_feas, grad_theta_opt, grad_theta_feas).

    The two gradient parts sum to grad_theta; a point with grad_theta = 0 but
    grad_theta_feas != 0 is stationary without being strongly stationary and
    is where the solver's feasibility escape step applies.
    """
    return (iterate.h_opt, iterate.h_feas,
            iterate.grad_theta_opt, iterate.grad_theta_feas)


def recover_kkt(problem: NcpProblem, x: np.ndarray, lam: np.ndarray):
    """Map (x, lam) to the primal-dual pair (x, sigma) and measure its KKT
    residuals.  At a zero of H all four certificate entries vanish."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if problem.m == 0:
        stat = float(np.linalg.norm(problem.grad_f(x)))
        return x, np.zeros(0), KktCertificate(stat, 0.0, 0.0, 0.0)
    sigma = cones.project_dual(problem.cone, lam)
    gx = problem.g_eval(x)
    stat = float(np.linalg.norm(problem.grad_f(x) - problem.dg_adjoint(x, sigma)))
    primal = float(np.linalg.norm(gx - cones.project(problem.cone, gx)))
    dual = float(np.linalg.norm(sigma - cones.project_dual(problem.cone, sigma)))
    comp = abs(float(sigma @ gx))
    return x, sigma, KktCertificate(stat, primal, dual, comp)


def reduce_double_cone(problem: NcpProblem, xcone: Cone) -> NcpProblem:
    """Eliminate an extra membership constraint x in C by substitution.

    For the program  min f(x) s.t. g(x) in K, x in C  the substitution
    x = project(C, y) yields a residual system in (y, sigma):

        grad f(p) - Dg(p)^T P_{K*}(sigma) - p + y = 0,    p = project(C, y)
        g(p) - P_{K*}(sigma) + sigma = 0

    Zeros map back to KKT points via (x, lam) = (project(C, y), P_{K*}(sigma)).
    The result reuses the constraint cone K of the input problem; with no
    functional constraint (cone None) it degenerates to the single equation
    grad f(p) - p + y = 0, which is also how the simplicial projection
    subproblem is solved.
    """
    if xcone.dim != problem.x_dim:
        raise ValueError("x-cone dimension must match the primal dimension")
    base = problem

    memo: dict = {"key": None, "p": None, "v": None}

    def _pv(y: np.ndarray):
        key = y.tobytes()
        if memo["key"] != key:
            memo["key"] = key
            memo["p"] = cones.project(xcone, y)
            memo["v"] = cones.clarke_element(xcone, y)
        return memo["p"], memo["v"]

    def f_eval(y):
        p = cones.project(xcone, y)
        return base.f_eval(p)

    def grad_f(y):
        p, _ = _pv(y)
        return base.grad_f(p) - p + y

    def hess_f(y):
        p, v = _pv(y)
        return (base.hess_f(p) - np.eye(base.x_dim)) @ v + np.eye(base.x_dim)

    if base.cone is None:
        reduced = NcpProblem(
            x_dim=base.x_dim, cone=None,
            f_eval=f_eval, grad_f=grad_f, hess_f=hess_f,
            name=base.name + "/reduced", meta=dict(base.meta))
        reduced.meta["xcone"] = xcone
        reduced.meta["base_problem"] = base
        return reduced

    def g_eval(y):
        p, _ = _pv(y)
        return base.g_eval(p)

    def dg_apply(y, dy):
        p, v = _pv(y)
        return base.dg_apply(p, v @ dy)

    def dg_adjoint(y, w):
        p, _ = _pv(y)
        return base.dg_adjoint(p, w)

    def d2g_adjoint(y, w):
        p, v = _pv(y)
        return base.d2g_adjoint(p, w) @ v

    def dg_matrix(y):
        p, v = _pv(y)
        return base.constraint_matrix(p) @ v

    def dg_adjoint_matrix(y):
        p, _ = _pv(y)
        return base.adjoint_matrix(p)

    reduced = NcpProblem(
        x_dim=base.x_dim, cone=base.cone,
        f_eval=f_eval, grad_f=grad_f, hess_f=hess_f,
        g_eval=g_eval, dg_apply=dg_apply, dg_adjoint=dg_adjoint,
        d2g_adjoint=d2g_adjoint, dg_matrix=dg_matrix,
        dg_adjoint_matrix=dg_adjoint_matrix,
        name=base.name + "/reduced", meta=dict(base.meta))
    reduced.meta["xcone"] = xcone
    reduced.meta["base_problem"] = base
    return reduced


def validate_derivatives(problem: NcpProblem, rng: np.random.Generator,
                         n_points: int = 5, h: float = 1e-6,
                         scale: float = 1.0) -> dict:
    """Central-difference check of every callback against its neighbour.

    Intended for tests and instance generators, never for the solve path.
    Only meaningful for plain problems where dg_adjoint is the true adjoint.
    Returns the worst relative errors keyed by callback name.
    """
    n, m = problem.x_dim, problem.m
    worst = {"grad_f": 0.0, "hess_f": 0.0, "dg_apply": 0.0,
             "adjoint_pairing": 0.0, "d2g_adjoint": 0.0}

    def rel(err, ref):
        return err / max(1.0, ref)

    for _ in range(n_points):
        x = scale * rng.standard_normal(n)
        dx = rng.standard_normal(n)
        dx /= np.linalg.norm(dx)
        fd = (problem.f_eval(x + h * dx) - problem.f_eval(x - h * dx)) / (2 * h)
        gval = problem.grad_f(x)
        worst["grad_f"] = max(worst["grad_f"], rel(abs(fd - float(gval @ dx)),
                                                   float(np.linalg.norm(gval))))
        hd = (problem.grad_f(x + h * dx) - problem.grad_f(x - h * dx)) / (2 * h)
        hmat = problem.hess_f(x)
        worst["hess_f"] = max(worst["hess_f"],
                              rel(float(np.linalg.norm(hd - hmat @ dx)),
                                  float(np.linalg.norm(hmat))))
        if m == 0:
            continue
        w = rng.standard_normal(m)
        w /= np.linalg.norm(w)
        gd = (problem.g_eval(x + h * dx) - problem.g_eval(x - h * dx)) / (2 * h)
        ga = problem.dg_apply(x, dx)
        worst["dg_apply"] = max(worst["dg_apply"],
                                rel(float(np.linalg.norm(gd - ga)),
                                    float(np.linalg.norm(ga))))
        pair = abs(float(ga @ w) - float(dx @ problem.dg_adjoint(x, w)))
        worst["adjoint_pairing"] = max(worst["adjoint_pairing"],
                                       rel(pair, float(np.linalg.norm(ga))))
        ad = (problem.dg_adjoint(x + h * dx, w)
              - problem.dg_adjoint(x - h * dx, w)) / (2 * h)
        amat = problem.d2g_adjoint(x, w)
        worst["d2g_adjoint"] = max(worst["d2g_adjoint"],
                                   rel(float(np.linalg.norm(ad - amat @ dx)),
                                       float(np.linalg.norm(amat)) + 1.0))
    return worst
