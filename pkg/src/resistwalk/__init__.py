"""Random walks, local times and resistance metrics on self-similar graphs."""

__version__ = "0.1.0"

from .graphs import (
    FamilySpec,
    WeightedGraph,
    build_graph,
    distance_matrix,
    generate,
    graph_distance,
    wire_vertices,
)
from .resistance import (
    LaplacianSolver,
    ResistanceMatrix,
    dirichlet_energy,
    effective_resistance,
    harmonic_potential,
    resistance_matrix,
    set_resistance,
    validate_metric,
)
from .exact_chain import (
    FirstPassageLaw,
    excursion_visit_law,
    excursion_visit_law_from_resistance,
    expected_hitting_time,
    expected_return_time,
    hit_before_return_prob,
    return_time_laplace,
    return_time_tail,
    transition_matrix,
)
from .walk_sim import (
    CoverTimeSample,
    LocalTimeField,
    RngStream,
    cover_time,
    inverse_local_time,
    max_scaled_difference_statistic,
    modulus_statistic,
    occupation_integral,
    run_walk,
    truncated_modulus_trial,
)
from .garsia import (
    GarsiaProfile,
    MetricContext,
    ball_volume_checks,
    exp_abs_psi,
    exp_square_psi,
    fit_power_volume,
    gamma_functional,
    garsia_bound,
    garsia_bound_matrix,
    garsia_integral_bound,
    garsia_integral_bound_curve,
    power_volume,
    psi_inverse,
    sqrt_gauge,
)
from .experiments import (
    CarpetGrowthReport,
    ExponentEstimate,
    ScalingReport,
    TailCurve,
    UvdReport,
    carpet_rho_estimate,
    check_uvd,
    cover_time_scaling,
    estimate_exponents,
    local_time_scaling,
    modulus_equicontinuity_gasket,
    sup_local_time_tail,
    tail_curve_thm_a,
    tail_curve_thm_b,
)
from .cli_io import (
    ExperimentConfig,
    RunManifest,
    export_graph,
    import_graph,
    parse_config,
    run_command,
)
from . import errors

__all__ = [
    "FamilySpec",
    "WeightedGraph",
    "build_graph",
    "distance_matrix",
    "generate",
    "graph_distance",
    "wire_vertices",
    "LaplacianSolver",
    "ResistanceMatrix",
    "dirichlet_energy",
    "effective_resistance",
    "harmonic_potential",
    "resistance_matrix",
    "set_resistance",
    "validate_metric",
    "FirstPassageLaw",
    "excursion_visit_law",
    "excursion_visit_law_from_resistance",
    "expected_hitting_time",
    "expected_return_time",
    "hit_before_return_prob",
    "return_time_laplace",
    "return_time_tail",
    "transition_matrix",
    "CoverTimeSample",
    "LocalTimeField",
    "RngStream",
    "cover_time",
    "inverse_local_time",
    "max_scaled_difference_statistic",
    "modulus_statistic",
    "occupation_integral",
    "run_walk",
    "truncated_modulus_trial",
    "GarsiaProfile",
    "MetricContext",
    "ball_volume_checks",
    "exp_abs_psi",
    "exp_square_psi",
    "fit_power_volume",
    "gamma_functional",
    "garsia_bound",
    "garsia_bound_matrix",
    "garsia_integral_bound",
    "garsia_integral_bound_curve",
    "power_volume",
    "psi_inverse",
    "sqrt_gauge",
    "CarpetGrowthReport",
    "ExponentEstimate",
    "ScalingReport",
    "TailCurve",
    "UvdReport",
    "carpet_rho_estimate",
    "check_uvd",
    "cover_time_scaling",
    "estimate_exponents",
    "local_time_scaling",
    "modulus_equicontinuity_gasket",
    "sup_local_time_tail",
    "tail_curve_thm_a",
    "tail_curve_thm_b",
    "ExperimentConfig",
    "RunManifest",
    "export_graph",
    "import_graph",
    "parse_config",
    "run_command",
    "errors",
    "__version__",
]
