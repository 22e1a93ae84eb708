"""Semilinear elliptic boundary-value problems with nonlocal boundary conditions.

The nonlocal problem is reduced to a scalar fixed-point equation mu = T(mu),
where T evaluates the boundary functional on the solution of a local
Dirichlet problem with boundary data g + sigma * mu.
"""

from .analytic import (
    MultipointSpec1D,
    NoUniqueSolution,
    closed_form_multipoint,
    eta,
    example22_solutions,
    find_eta_root,
    in_S_eta,
    lambda_star,
    multipoint_fixed_point,
)
from .expr import EvaluationError, ExpressionSyntaxError, evaluate, parse_expression, to_source
from .fields import FieldError, Nonlinearity, ScalarField, preset, validate_nonlinearity
from .geometry import Domain, DomainError, Grid, InteriorRegion, dist_to_boundary, interior_region, m_xi
from .local_solver import (
    GridFunction,
    NewtonConfig,
    NonConvergence,
    SolverError,
    recommended_resolution,
    solve_dense_oracle,
    solve_local_dirichlet,
)
from .nonlocal_bc import (
    FixedPointConfig,
    FixedPointResult,
    Root,
    estimate_contraction,
    evaluate_T,
    fixed_point_solve,
)
from .problem import NonlocalFunctional, ProblemError, ProblemSpec
from .verify import (
    DecayFit,
    InsufficientSignal,
    VerificationReport,
    check_boundary_limit,
    check_contraction_decay,
    check_interior_limit,
    check_maximum_principle,
    check_mu_monotonicity,
    fit_layer_decay,
)

__version__ = "0.1.0"
