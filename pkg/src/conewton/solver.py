"""Globalized semi-smooth Newton method for the conic residual system.

Each iteration solves J_H d = -H with a complete-pivot factorization.  When
that direction is unusable (singular Jacobian, ascent, negligible length, or
a linesearch that accepts no step) the method falls back to the regularized
least-squares direction

    (J_H^T J_H + sqrt(theta) I) d = -rhs

with rhs = grad theta, or, when the full merit gradient already vanishes but
its feasibility part does not, rhs = grad theta_feas.  That last escape step
is line-searched on the feasibility merit alone: at such a point the full
merit has zero slope along every direction, so an Armijo test on theta cannot
make progress, while the feasibility part is guaranteed a descent direction.
Newton and regularized steps always use the full merit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from typing import List, NamedTuple, Optional

import numpy as np

from . import linalg, ncp
from .ncp import Iterate, KktCertificate, NcpProblem

SOLVED = "Solved"
STRONGLY_STATIONARY = "StronglyStationary"
MAX_ITERATIONS = "MaxIterations"
LINESEARCH_STALLED = "LinesearchStalled"
PROGRESS_STALLED = "ProgressStalled"

STEP_NEWTON = "Newton"
STEP_REGULARIZED = "Regularized"
STEP_FEAS_ESCAPE = "FeasEscape"


@dataclass
class SolverConfig:
    c: float = 0.1
    tol: float = 1e-8
    dtol: float = 1e-12
    maxiter: int = 100
    maxiter_ls: int = 20
    singular_pivot_rel: float = 1e-12
    stationary_eps: float = 1e-10
    progress_eps: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.c < 0.5:
            raise ValueError("Armijo constant must lie in (0, 1/2)")
        if self.tol <= 0.0 or self.dtol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.maxiter < 1 or self.maxiter_ls < 1:
            raise ValueError("iteration limits must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TraceRow:
    iteration: int
    h_norm: float
    theta: float
    theta_feas: float
    step_kind: str
    alpha: float
    d_norm: float
    ls_count: int
    dir_deriv: float


@dataclass
class SolveReport:
    status: str
    x: np.ndarray
    lam: np.ndarray
    iterations: int
    final_h_norm: float
    final_theta: float
    residual_history: List[float]
    trace: List[TraceRow]
    wall_time: float
    certificate: KktCertificate
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def best_h_norm(self) -> float:
        return min(self.residual_history)

    def step_counts(self) -> dict:
        out = {STEP_NEWTON: 0, STEP_REGULARIZED: 0, STEP_FEAS_ESCAPE: 0}
        for row in self.trace:
            out[row.step_kind] += 1
        return out


class LinesearchResult(NamedTuple):
    ok: bool
    alpha: float
    iterate: Optional[Iterate]
    ls_count: int


def newton_direction(problem: NcpProblem, iterate: Iterate,
                     config: SolverConfig):
    """Solve J_H d = -H.  Returns (d, ok); ok is False when the factorization
    flags a pivot below singular_pivot_rel times the largest, or the refined
    solve misses the 1e-10 relative-residual contract."""
    d, ok = linalg.solve_checked(iterate.jacobian, -iterate.h,
                                 config.singular_pivot_rel)
    return d, ok


def regularized_direction(problem: NcpProblem, iterate: Iterate,
                          rhs_gradient: np.ndarray,
                          config: SolverConfig) -> np.ndarray:
    """Solve (J^T J + sqrt(theta) I) d = -rhs_gradient.

    The shift sqrt(theta) keeps the matrix positive definite away from zeros
    of H, and makes the direction a guaranteed descent direction for the
    merit whose gradient was passed in."""
    if iterate.theta <= 0.0:
        raise ValueError("regularized direction is undefined at a zero of H")
    jac = iterate.jacobian
    jtj = jac.T @ jac
    eye = np.eye(jac.shape[1])
    shift = np.sqrt(iterate.theta)
    try:
        return linalg.solve_spd(jtj + shift * eye, -rhs_gradient)
    except np.linalg.LinAlgError:
        pass
    # sqrt(theta) underflows below the rounding noise of J^T J near a zero
    # of H and the factorization loses definiteness; retry with an eps floor
    # only then, so successful paths stay bit-identical.
    floor = 64.0 * np.finfo(float).eps * max(1.0, float(jtj.diagonal().max(initial=0.0)))
    try:
        return linalg.solve_spd(jtj + (shift + floor) * eye, -rhs_gradient)
    except np.linalg.LinAlgError:
        return linalg.lstsq_minnorm(jtj + (shift + floor) * eye, -rhs_gradient)


def armijo_linesearch(problem: NcpProblem, iterate: Iterate,
                      direction: np.ndarray, directional_derivative: float,
                      config: SolverConfig,
                      merit: str = "theta") -> LinesearchResult:
    """Backtracking halving search from alpha = 1.

    Accepts the first alpha with  phi(z + alpha d) <= phi(z) + alpha c dd,
    where phi is theta or, for feasibility escape steps, theta_feas.  At most
    maxiter_ls halvings are tried before reporting failure.
    """
    if not directional_derivative < 0.0:
        raise ValueError("linesearch requires a negative directional derivative")
    n = problem.x_dim
    if merit == "theta":
        phi0 = iterate.theta
    elif merit == "theta_feas":
        phi0 = iterate.theta_feas
    else:
        raise ValueError(f"unknown merit {merit!r}")
    alpha = 1.0
    for halvings in range(config.maxiter_ls + 1):
        trial = ncp.make_iterate(problem,
                                 iterate.x + alpha * direction[:n],
                                 iterate.lam + alpha * direction[n:])
        phi = trial.theta if merit == "theta" else trial.theta_feas
        if phi <= phi0 + alpha * config.c * directional_derivative:
            return LinesearchResult(True, alpha, trial, halvings)
        alpha *= 0.5
    return LinesearchResult(False, alpha, None, config.maxiter_ls)


def solve(problem: NcpProblem, x0: np.ndarray, lam0: np.ndarray,
          config: Optional[SolverConfig] = None) -> SolveReport:
    """Run the globalized semi-smooth Newton iteration from (x0, lam0)."""
    cfg = config if config is not None else SolverConfig()
    start = time.perf_counter()
    it = ncp.make_iterate(problem, x0, lam0)
    history = [it.h_norm]
    trace: List[TraceRow] = []
    status = None
    k = 0
    while True:
        if it.h_norm < cfg.tol:
            status = SOLVED
            break
        if k >= cfg.maxiter:
            status = MAX_ITERATIONS
            break

        # direction cascade: Newton, then the regularized step, then (only at
        # merit-stationary points) the feasibility escape; a direction whose
        # linesearch fails falls through to the next one
        plan = []
        d, ok = newton_direction(problem, it, cfg)
        if ok:
            dd = float(it.grad_theta @ d)
            if dd < 0.0 and float(np.linalg.norm(d)) >= cfg.dtol:
                plan.append((STEP_NEWTON, d, dd, "theta"))
        if float(np.linalg.norm(it.grad_theta)) > cfg.stationary_eps:
            plan.append((STEP_REGULARIZED, None, 0.0, "theta"))
        elif float(np.linalg.norm(it.grad_theta_feas)) > cfg.stationary_eps:
            plan.append((STEP_FEAS_ESCAPE, None, 0.0, "theta_feas"))
        if not plan:
            status = STRONGLY_STATIONARY
            break

        attempt = None
        for step_kind, d, dd, merit in plan:
            if d is None:
                rhs = (it.grad_theta if step_kind == STEP_REGULARIZED
                       else it.grad_theta_feas)
                d = regularized_direction(problem, it, rhs, cfg)
                dd = float(rhs @ d)
                if dd >= 0.0:
                    continue
            ls = armijo_linesearch(problem, it, d, dd, cfg, merit=merit)
            attempt = (step_kind, d, dd, merit, ls)
            if ls.ok:
                break
        if attempt is None:
            status = STRONGLY_STATIONARY
            break

        step_kind, d, dd, merit, ls = attempt
        d_norm = float(np.linalg.norm(d))
        trace.append(TraceRow(k, it.h_norm, it.theta, it.theta_feas,
                              step_kind, ls.alpha if ls.ok else 0.0,
                              d_norm, ls.ls_count, dd))
        if not ls.ok:
            status = LINESEARCH_STALLED
            break
        progress = ls.alpha * d_norm
        it = ls.iterate
        history.append(it.h_norm)
        k += 1
        if cfg.progress_eps is not None and progress < cfg.progress_eps:
            status = PROGRESS_STALLED
            break

    wall = time.perf_counter() - start
    _, _, cert = ncp.recover_kkt(problem, it.x, it.lam)
    return SolveReport(status=status, x=it.x, lam=it.lam, iterations=k,
                       final_h_norm=it.h_norm, final_theta=it.theta,
                       residual_history=history, trace=trace,
                       wall_time=wall, certificate=cert, config=cfg)
