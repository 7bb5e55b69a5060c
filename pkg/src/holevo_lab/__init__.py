"""holevo_lab: constrained Holevo chi-capacity of finite-dimensional
quantum channels with certified two-sided bounds, plus additivity
experiments for the channel classes where subadditivity is proven."""

from .opalg import (
    DensityOperator,
    DimensionMismatch,
    ExtendedReal,
    HermitianOperator,
    INF,
    InvalidOperand,
    entropy,
    partial_trace,
    relative_entropy,
    tensor,
    trace_distance,
)
from .channels import (
    Channel,
    ClassicalChannelSpec,
    apply,
    channel_from_config,
    channel_from_dict,
    channel_to_dict,
    channels_equal,
    completely_depolarizing,
    compose,
    depolarizing,
    direct_sum_mixture,
    example2_channel,
    example2_limit,
    measure_prepare,
    noiseless,
    random_channel,
    tensor_channel,
    truncate,
)
from .ensembles import (
    DegenerateTransport,
    Ensemble,
    average_state,
    chi_quantity,
    convex_combination,
    donald_check,
    ensemble_from_dict,
    ensemble_to_dict,
    transport_ensemble,
)
from .capacity import (
    CapacityResult,
    ExpectationBound,
    InfeasibleConstraint,
    Singleton,
    SolverOptions,
    Unconstrained,
    UNCONSTRAINED,
    brute_force_capacity,
    chi_capacity,
    chi_function,
    convex_closure_output_entropy,
    feasible_point_bound_check,
    divergence_radius_at,
    output_optimal_average,
)
from .additivity import (
    AdditivityReport,
    ProductConstraint,
    additivity_report,
    joint_capacity,
    min_output_entropy,
    moe_additivity_gap,
    product_omega_check,
    subadditivity_gap,
    superadditivity_gap_Hhat,
)

__version__ = "0.1.0"
