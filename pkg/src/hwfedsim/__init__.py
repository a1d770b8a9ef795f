"""Deterministic simulator for hardware-aware federated learning scheduling.

Core building blocks are importable from the top level; the FastAPI service
lives in :mod:`hwfedsim.service` and the CLI in :mod:`hwfedsim.cli`.
"""

from .accounting import (
    CommMode,
    TrialSummary,
    cohens_d,
    comm_cost_round,
    round_time,
    simulate_client_time,
    summarize_trials,
    welch_t,
)
from .datasets import (
    DataMode,
    DataSpec,
    FederatedData,
    LatencyPerturbation,
    load_feature_csv,
    load_fleet_csv,
    perturb_latency,
    synthesize_noniid,
    write_feature_csv,
)
from .devices import (
    DeviceProfile,
    HardwareScore,
    NormalizedProfile,
    ScoreWeights,
    energy_proxy,
    hardware_score,
    normalize_fleet,
    score_fleet,
)
from .federation import (
    ExperimentConfig,
    ExperimentResult,
    Method,
    RoundMetrics,
    TrainDefaults,
    aggregate_fedavg,
    aggregate_hwfl,
    run_experiment,
    run_round,
    run_trial,
)
from .scheduling import (
    FairnessTracker,
    ObjectiveReport,
    RoundPlan,
    adaptive_epochs,
    brute_force_schedule,
    heuristic_schedule,
    jain_index,
    objective_of_plan,
    select_all,
    select_random_k,
    select_top_k,
)
from .training import (
    EvalMetrics,
    LocalDataset,
    ModelParams,
    TrainSpec,
    evaluate,
    init_model,
    local_train,
    loss_and_grad,
)

__version__ = "0.1.0"
