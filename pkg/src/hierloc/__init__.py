"""Cooperative localization in wireless sensor networks.

Nonparametric belief propagation with a space-time hierarchical scheme:
bootstrap-percolation layering, controlled inter-/intra-layer message
passing, activation-based traffic management, spanning-tree baselines,
and a seeded Monte Carlo experiment harness.
"""

from .errors import (
    ConfigurationError,
    DegenerateWeightsError,
    HierlocError,
    IntegrityError,
    InvalidMeasurementError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    TrialRecord,
    compare,
    preset,
    replay_trial,
    run_experiment,
    run_single_trial,
)
from .graph import (
    ConnectivityGraph,
    TreeGraph,
    bfs_spanning_tree,
    build_connectivity,
    count_links,
    min_spanning_tree,
)
from .hierarchy import (
    ActivationState,
    LayerAssignment,
    assign_layers,
    candidate_refs,
    confidence,
    run_hierarchical_nbp,
)
from .metrics import (
    CdfCurve,
    ComplexityReport,
    analytic_complexity,
    cer,
    error_cdf,
    errors_to_cdf,
    measured_links,
    reference_belief,
)
from .nbp import (
    LayerStats,
    RunConfig,
    RunResult,
    compute_message,
    fuse_marginal,
    run_standard_nbp,
    run_tree_nbp,
)
from .particles import (
    MixtureMessage,
    ParticleBelief,
    gaussian_entropy,
    init_belief,
    mixture_density,
    mixture_logdensity,
    mmse_estimate,
    resample,
)
from .scenario import (
    MeasurementSet,
    NoiseModel,
    Scenario,
    ScenarioConfig,
    anchor_layout,
    detect,
    generate_scenario,
    measure_distances,
)
from .traffic import MSL, MUL, TrafficLog, TrafficRecord

__version__ = "0.1.0"
