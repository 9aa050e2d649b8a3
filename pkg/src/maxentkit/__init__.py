"""maxentkit: certified relative-entropy minimization under noisy moment
constraints, with a smoothed fast-gradient dual solver, and two applications
built on it (reaction-network moment closure, constrained-MDP approximate
dynamic programming)."""

from .problem import (
    MomentProblem,
    ReferenceMeasure,
    SmoothingParams,
    SupportInterval,
    TargetSet,
    distance_to_target,
    operator_norm_bound,
    project_onto_target,
    reciprocal_density_moments,
    support_function,
)
from .integrate import QuadratureRule, composite_rule, log2_integral, qmc_rule, vdc_sequence
from .gibbs import (
    DualEvaluation,
    GridMeasure,
    dual_value,
    gibbs_measure,
    moments_of_gibbs,
    smoothed_dual,
)
from .solver import (
    Certificate,
    SlaterData,
    SolveResult,
    SolverConfig,
    apriori_iterations,
    diagnostics_appendix,
    posterior_certificate,
    run_algorithm1,
    smoothing_for_accuracy,
    solve,
)

__version__ = "0.1.0"
