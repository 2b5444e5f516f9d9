"""Solvers for chance-constrained programs over finite scenario sets.

The toolkit covers the hinge-based budget bisection scheme and its
rescued variant, the conditional value-at-risk baseline, alternating
and difference-of-convex lower-level solvers, covering relaxations,
worst-case counterparts over transport ambiguity balls, closed-form
Gaussian single-row machinery, and an exact enumeration oracle, plus a
small CLI (``ccpkit``) that runs them on JSON instance documents.
"""

from .alsox import also_x, bounds_with_anchor
from .alsoxplus import also_x_plus
from .covering import (
    RelaxationResult,
    covering_relaxation,
    quantile_lower_bound,
    relax_and_scale,
    subset_min_cost,
)
from .cvar import cvar_lower_value, cvar_solution
from .drccp import DrccpSpec, robustify, worst_case_solve
from .elliptical import (
    EllipticalCcp,
    also_x_elliptical,
    conic_margin,
    elliptical_from_doc,
    elliptical_to_doc,
    exact_conic_solve,
    gaussian_hinge,
    gaussian_hinge_gradient,
    gaussian_violation,
    hinge_factor,
    load_elliptical,
    robust_conic_margin,
    sample_losses,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from .errors import (
    BackendUnavailable,
    BadStart,
    CapExceeded,
    CcpError,
    CycleGuardTripped,
    DimensionError,
    DomainError,
    Infeasible,
    InfeasibleBudget,
    ModeMismatch,
    NoConvergence,
    NoFeasibleT,
    NonFinite,
    NormMismatch,
    ParseError,
    UnsupportedSet,
    ValidationError,
)
from .geometry import as_polyhedron, dykstra_project, flatten_set, project
from .lowerlevel import (
    AmResult,
    DcResult,
    LowerLevelSolution,
    am,
    dc_solve,
    pick_backend,
    solve_lower_level,
    z_update,
)
from .lp import LpOutcome, LpProblem, solve_lp
from .model import (
    AffineEqualities,
    BiAffine,
    BiAffineEquality,
    BinaryTiny,
    Box,
    CcpInstance,
    Covering,
    Halfspaces,
    Intersection,
    L1,
    L2,
    LInf,
    Mahalanobis,
    NonNegOrthant,
    NormAugmented,
    NormSpec,
    SeparableConvexPower,
    Simplex,
    SolveReport,
    default_zero_tol,
    dump_instance,
    dual_norm,
    dual_norm_subgradient,
    is_feasible,
    load_instance,
    scenario_losses,
    set_contains,
    set_dim,
    violation_probability,
)
from .oracle import (
    NullspaceVerdict,
    check_nullspace_property,
    exact_solve,
    exact_solve_binary,
)
from .subgrad import Constant, Harmonic, SgdConfig, SgdResult, feasible_start, solve_hinge_sgd

__version__ = "0.1.0"

__all__ = [
    "AffineEqualities",
    "AmResult",
    "BackendUnavailable",
    "BadStart",
    "BiAffine",
    "BiAffineEquality",
    "BinaryTiny",
    "Box",
    "CapExceeded",
    "CcpError",
    "CcpInstance",
    "Constant",
    "Covering",
    "CycleGuardTripped",
    "DcResult",
    "DimensionError",
    "DomainError",
    "DrccpSpec",
    "EllipticalCcp",
    "Halfspaces",
    "Harmonic",
    "Infeasible",
    "InfeasibleBudget",
    "Intersection",
    "L1",
    "L2",
    "LInf",
    "LowerLevelSolution",
    "LpOutcome",
    "LpProblem",
    "Mahalanobis",
    "ModeMismatch",
    "NoConvergence",
    "NoFeasibleT",
    "NonFinite",
    "NonNegOrthant",
    "NormAugmented",
    "NormMismatch",
    "NormSpec",
    "NullspaceVerdict",
    "ParseError",
    "RelaxationResult",
    "SeparableConvexPower",
    "SgdConfig",
    "SgdResult",
    "Simplex",
    "SolveReport",
    "UnsupportedSet",
    "ValidationError",
    "also_x",
    "also_x_elliptical",
    "also_x_plus",
    "am",
    "as_polyhedron",
    "bounds_with_anchor",
    "check_nullspace_property",
    "conic_margin",
    "covering_relaxation",
    "cvar_lower_value",
    "cvar_solution",
    "dc_solve",
    "default_zero_tol",
    "dual_norm",
    "dual_norm_subgradient",
    "dump_instance",
    "dykstra_project",
    "elliptical_from_doc",
    "elliptical_to_doc",
    "exact_conic_solve",
    "exact_solve",
    "exact_solve_binary",
    "feasible_start",
    "flatten_set",
    "gaussian_hinge",
    "gaussian_hinge_gradient",
    "gaussian_violation",
    "hinge_factor",
    "is_feasible",
    "load_elliptical",
    "load_instance",
    "pick_backend",
    "project",
    "quantile_lower_bound",
    "relax_and_scale",
    "robust_conic_margin",
    "robustify",
    "sample_losses",
    "scenario_losses",
    "set_contains",
    "set_dim",
    "solve_hinge_sgd",
    "solve_lower_level",
    "solve_lp",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "subset_min_cost",
    "violation_probability",
    "worst_case_solve",
    "z_update",
]
