"""Semi-smooth Newton solver for nonlinear conic programs.

The residual system couples stationarity with a Moreau-decomposed
complementarity equation; its zeros are KKT points.  Cone projections and
their Clarke elements live in :mod:`conewton.cones` (with image cones in
:mod:`conewton.simplicial`), the residual machinery in :mod:`conewton.ncp`,
the damped Newton loop in :mod:`conewton.solver`, and the benchmark problem
families plus the CLI in :mod:`conewton.problems` / :mod:`conewton.cli`.
"""

from .cones import (
    Cone,
    circular,
    clarke_element,
    clarke_element_dual,
    free,
    nonneg_orthant,
    product,
    project,
    project_dual,
    psd,
    second_order,
    simplicial,
    smat,
    svec,
    svec_dim,
    zero,
)
from .ncp import (
    Iterate,
    KktCertificate,
    NcpProblem,
    jacobian_JH,
    make_iterate,
    merit_theta,
    recover_kkt,
    reduce_double_cone,
    residual_H,
    split_residual,
)
from .simplicial import (
    ProjectionError,
    closedness_diagnostic,
    dual_membership,
    simplicial_clarke,
    simplicial_project,
)
from .solver import SolveReport, SolverConfig, solve

__version__ = "0.1.0"

__all__ = [
    "Cone",
    "Iterate",
    "KktCertificate",
    "NcpProblem",
    "ProjectionError",
    "SolveReport",
    "SolverConfig",
    "circular",
    "clarke_element",
    "clarke_element_dual",
    "closedness_diagnostic",
    "dual_membership",
    "free",
    "jacobian_JH",
    "make_iterate",
    "merit_theta",
    "nonneg_orthant",
    "product",
    "project",
    "project_dual",
    "psd",
    "recover_kkt",
    "reduce_double_cone",
    "residual_H",
    "second_order",
    "simplicial",
    "simplicial_clarke",
    "simplicial_project",
    "smat",
    "solve",
    "split_residual",
    "svec",
    "svec_dim",
    "zero",
]
