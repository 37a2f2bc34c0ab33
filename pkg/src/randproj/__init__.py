"""Randomized projection methods for convex feasibility problems.

A feasibility problem asks for a point in the intersection of closed
convex sets.  This package provides projection/membership oracles for the
common set families, seeded sampling over sets and sketches, exact and
estimated conditioning constants (gamma, kappa, gamma_N), the minibatch
stochastic projection solver with its single-sample / averaged /
alternating specializations, probe-based verification of the governing
inequalities and convergence-rate bounds, and a reproducible benchmark
harness with a small command-line front end.
"""

__version__ = "0.1.0"

from .conditioning import (
    ConditioningReport,
    estimate_gamma_empirical,
    estimate_hoffman,
    estimate_kappa_empirical,
    expectation_matrix,
    gamma_N,
    gamma_linear_inequalities,
    gamma_linear_system,
    kappa_halfspaces,
    kappa_interior_ball,
    kappa_linear_system,
    report_for_problem,
)
from .diagnostics import (
    RateFit,
    TheoremCheckResult,
    check_firm_nonexpansive,
    check_operator_contraction,
    check_sandwich,
    exact_distance_affine,
    fit_rates,
    grad_F,
    reference_distance,
    value_F,
)
from .errors import (
    DegenerateCutError,
    InfeasibleAggregateError,
    InvalidConfigError,
    InvalidInputError,
    InvalidSetError,
    NumericalFailureError,
    RandprojError,
)
from .sampling import (
    DiscreteDistribution,
    RngStream,
    SketchSampler,
    row_norm_weights,
    sample,
    sample_minibatch,
    uniform_weights,
)
from .sets import (
    AbsPowerEpigraph,
    Ball,
    Box,
    Halfspace,
    Hyperplane,
    NormalConeFamily,
    SeparationOracleSet,
    SketchedEqualitySet,
    SketchedHalfspace,
    SplitFeasibilityFamily,
    WholeSpace,
    separation_cut,
    supporting_halfspace,
)
from .solvers import (
    FeasibilityProblem,
    IterationTrace,
    SolverConfig,
    StepsizePolicy,
    compute_adaptive_gamma,
    run_avp,
    run_bap,
    run_sap,
    run_spa,
    spa_step,
    stepsize_for,
)
