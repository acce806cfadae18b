"""Map-aided hierarchical beam training: codebooks, gain maps, search
strategies, and a reproducible Monte-Carlo harness."""

from .beamtree import (
    BeamWeightTable,
    PrunedTree,
    apply_observation,
    candidate_beams,
    compute_point_weights,
)
from .channel import (
    ArrayConfig,
    ChannelRealization,
    Environment,
    Obstacle,
    PropagationPath,
    Scatterer,
    probe,
    steering_vector,
    synthesize_channel,
)
from .ckm import (
    CkmFormatError,
    CkmGrid,
    GridSpec,
    build_ckm,
    load_ckm,
    lookup_gain,
    save_ckm,
)
from .codebook import (
    BeamId,
    HierarchicalCodebook,
    beam_support,
    bottom_angles,
    build_codebook,
    navigate,
    num_layers,
)
from .harness import (
    ALGORITHMS,
    RegionSpec,
    ScenarioConfig,
    TrialRecord,
    UserSpec,
    baseline_exhaustive,
    baseline_hierarchical,
    load_scenario,
    noise_std_for_snr,
    read_results_csv,
    reference_gain,
    region_points,
    run_trials,
    scenario_from_dict,
    summarize,
    user_priors,
    write_cdf_csv,
    write_results_csv,
    write_summary_csv,
)
from .lookahead import run_lookahead
from .multiuser import run_multi_user, similarity
from .position import (
    PositionPrior,
    SubRegion,
    point_probability,
    prune_points,
    sample_true_position,
)
from .strategy import (
    best_activation,
    enumerate_activations,
    optimal_layer,
    overhead_for_target,
    reward,
    run_single_user,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "ArrayConfig",
    "BeamId",
    "BeamWeightTable",
    "ChannelRealization",
    "CkmFormatError",
    "CkmGrid",
    "Environment",
    "GridSpec",
    "HierarchicalCodebook",
    "Obstacle",
    "PositionPrior",
    "PropagationPath",
    "PrunedTree",
    "RegionSpec",
    "Scatterer",
    "ScenarioConfig",
    "SubRegion",
    "TrialRecord",
    "UserSpec",
    "apply_observation",
    "baseline_exhaustive",
    "baseline_hierarchical",
    "beam_support",
    "best_activation",
    "bottom_angles",
    "build_ckm",
    "build_codebook",
    "candidate_beams",
    "compute_point_weights",
    "enumerate_activations",
    "load_ckm",
    "load_scenario",
    "lookup_gain",
    "navigate",
    "noise_std_for_snr",
    "num_layers",
    "optimal_layer",
    "overhead_for_target",
    "point_probability",
    "probe",
    "prune_points",
    "read_results_csv",
    "reference_gain",
    "region_points",
    "reward",
    "run_lookahead",
    "run_multi_user",
    "run_single_user",
    "run_trials",
    "sample_true_position",
    "save_ckm",
    "scenario_from_dict",
    "similarity",
    "steering_vector",
    "summarize",
    "synthesize_channel",
    "user_priors",
    "write_cdf_csv",
    "write_results_csv",
    "write_summary_csv",
]
