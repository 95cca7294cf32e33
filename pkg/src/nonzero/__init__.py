"""Candidate-set tree search for joint action spaces.

A planner grows a small candidate set per node instead of branching on all
d**n joint actions.  An interaction-aware surrogate (asinh-link GLM over
n-hot encodings) is fit online from four-point reward probes and ranks which
single and coordinated two-agent deviations to add next.  The package also
ships payoff-tensor environments, exhaustive landscape oracles, flat UCB and
sampled-prior bandit baselines, regret metrics, and an experiment harness.
"""

from .actions import (
    Direction,
    JointAction,
    JointActionSpace,
    apply_direction,
    apply_pair,
    direction_pair_count,
    encode_nhot,
    neighbors,
    sample_direction_pair,
)
from .baselines import BaselineConfig, run_flat_ucb, run_full_puct, run_sampled_puct
from .errors import (
    ConfigError,
    EmptyBatchError,
    EnumerationCapError,
    InfeasibleDeviationError,
    InvalidActionError,
    InvalidPairError,
    NoPairAvailableError,
    NumericFailureError,
)
from .harness import (
    EnvSpec,
    ExperimentConfig,
    PlannerSpec,
    parse_config,
    run_experiment,
    run_matrix,
)
from .matgame import (
    EpisodicMatGame,
    PayoffTensor,
    TrapInstance,
    entry_noise,
    make_coordination_trap,
    make_linear,
    make_nonlinear,
)
from .metrics import (
    RegretLedger,
    SeparationResult,
    TheoryConstants,
    build_regret_ledger,
    gap_regret,
    hitting_time,
    indicator_regret,
    local_regret_bound,
    loglog_slope,
    nearest_local_maximizer,
    separation_ratio,
    theory_constants,
)
from .oracle import (
    LocalOptimalityReport,
    SmoothnessReport,
    deviation_gain_tables,
    deviation_gains,
    epsilon2_threshold,
    estimate_smoothness,
    global_argmax,
    local_maximizer_set,
    local_optimality_report,
)
from .planner import CandidateSearch, PlannerConfig, recommend, run_search
from .proposal import (
    ProposalConfig,
    ScoredProposal,
    best_candidate,
    pair_count,
    propose,
    score_pairs,
    score_singles,
)
from .surrogate import (
    SupervisionSample,
    SurrogateParams,
    action_score,
    composite_error,
    decomposition_residual,
    delta1,
    delta2,
    eta,
    link_slope,
    link_value,
    loss_gradient,
    nonuct_loss,
    predict4,
    score,
    sgd_step,
    supervision_from_reward,
)
from .trace import SCHEMA, ExpansionRecord, SearchTrace, TraceStep

__version__ = "0.1.0"

__all__ = [
    "BaselineConfig",
    "CandidateSearch",
    "ConfigError",
    "Direction",
    "EmptyBatchError",
    "EnumerationCapError",
    "EnvSpec",
    "EpisodicMatGame",
    "ExpansionRecord",
    "ExperimentConfig",
    "InfeasibleDeviationError",
    "InvalidActionError",
    "InvalidPairError",
    "JointAction",
    "JointActionSpace",
    "LocalOptimalityReport",
    "NoPairAvailableError",
    "NumericFailureError",
    "PayoffTensor",
    "PlannerConfig",
    "PlannerSpec",
    "ProposalConfig",
    "RegretLedger",
    "SCHEMA",
    "ScoredProposal",
    "SearchTrace",
    "SeparationResult",
    "SmoothnessReport",
    "SupervisionSample",
    "SurrogateParams",
    "TheoryConstants",
    "TraceStep",
    "TrapInstance",
    "action_score",
    "apply_direction",
    "apply_pair",
    "best_candidate",
    "build_regret_ledger",
    "composite_error",
    "decomposition_residual",
    "delta1",
    "delta2",
    "deviation_gain_tables",
    "deviation_gains",
    "direction_pair_count",
    "encode_nhot",
    "entry_noise",
    "epsilon2_threshold",
    "estimate_smoothness",
    "eta",
    "gap_regret",
    "global_argmax",
    "hitting_time",
    "indicator_regret",
    "link_slope",
    "link_value",
    "local_maximizer_set",
    "local_optimality_report",
    "local_regret_bound",
    "loglog_slope",
    "loss_gradient",
    "make_coordination_trap",
    "make_linear",
    "make_nonlinear",
    "nearest_local_maximizer",
    "neighbors",
    "nonuct_loss",
    "pair_count",
    "parse_config",
    "predict4",
    "propose",
    "recommend",
    "run_experiment",
    "run_flat_ucb",
    "run_full_puct",
    "run_matrix",
    "run_sampled_puct",
    "run_search",
    "sample_direction_pair",
    "score",
    "score_pairs",
    "score_singles",
    "separation_ratio",
    "sgd_step",
    "supervision_from_reward",
    "theory_constants",
]
