"""Reduced-order models of affinely parametrized linear systems with
randomized, constant-free a posteriori error certification."""

from .covariance import CovarianceSpec, sigma_inverse_norm, sigma_norm
from .errors import (
    ConfigError,
    DegenerateEigenproblemError,
    DomainError,
    NormNotInvertibleError,
    RbsketchError,
    SingularOperatorError,
    SingularReducedSystemError,
)
from .estimator import (
    DualSnapshotMatrix,
    OnlineEstimator,
    build_online_estimator,
    effectivity_alpha,
    epsilon_dual_residual,
    estimator_ratio,
    exact_estimator_from_duals,
    exact_estimator_from_truth,
    fast_estimator,
    solve_random_duals,
)
from .greedy import (
    GreedyConfig,
    GreedyResult,
    greedy_dual_goal_oriented,
    greedy_dual_vector,
    leading_eigenvector,
    pod_dual_baseline,
    quantile,
)
from .helmholtz import (
    BENCHMARK_DOMAIN,
    HelmholtzDiscretization,
    assemble_helmholtz,
    full_solve,
    qoi_extract,
    resonance_mu2,
)
from .primal import (
    ReducedModel,
    reduce,
    reference_solution_space,
    residual_dual_norm,
    residual_vector,
    solve_reduced,
    weak_greedy_primal,
)
from .sketch import (
    Sketch,
    chi2_fail_bound,
    chi2_fail_exact,
    draw_sketch,
    select_sample_count,
    sketch_norm,
)
from .spaces import ReducedSpace, SpaceBuilder
from .system import (
    AffineSystem,
    Coefficient,
    ParameterDomain,
    SampleSet,
    assemble_operator,
    sample_parameters,
)

__version__ = "0.1.0"
