"""k-center clustering with outliers: randomized greedy solvers, weighted
coresets, exact oracles, and a simulated two-round distributed protocol."""

from .bench import ALGORITHMS, ExperimentSpec, run_experiment
from .core import (
    CenterSet,
    ClusteringEval,
    DistanceStats,
    GuardError,
    NearestTracker,
    ParamSet,
    PointSet,
    ceil_count,
    clustering_cost,
    cost_radius,
    farthest_m,
    load_distance_matrix_csv,
    load_points_csv,
    radius_after_exclusions,
    relaxed_exclusions,
    weighted_cost,
)
from .coreset import (
    UniformSample,
    WeightedCoreset,
    build_coreset,
    build_coreset_auto,
    compose_with_host,
    uniform_sample,
    uniform_sample_size,
)
from .distributed import (
    CommLedger,
    ProtocolResult,
    ShardedInstance,
    SiteProfile,
    StepFunction,
    ThresholdDecision,
    coordinator_threshold,
    minimax_oracle,
    outlier_budget_grid,
    run_protocol,
    site_round_one,
    site_round_two,
)
from .generate import (
    GeneratorSpec,
    PlantedInstance,
    inject_outliers,
    meb_approx,
    planted_instance,
)
from .greedy import (
    GreedyConfig,
    SublinearConfig,
    bicriteria,
    boost_repetitions,
    greedy_config,
    sublinear_bicriteria,
    sublinear_config,
    two_approx,
    two_approx_boosted,
)
from .solvers import (
    OracleResult,
    brute_force_opt,
    brute_force_weighted,
    charikar_3approx,
    gonzalez,
)

__version__ = "0.1.0"
