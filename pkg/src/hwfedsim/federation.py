"""Multi-round federated training driver for every supported method.

One experiment is (method, fleet, data spec, seeds). Per trial seed the driver
derives independent substreams for data synthesis, model initialization,
per-client batch shuffles, random selection, and latency jitter, so toggling
one mechanism never disturbs another's randomness and identical configs always
reproduce identical outputs.

Method compositions:
  hwfl           score top-k selection, adaptive epochs, score-weighted mean
  fedavg         all clients, base epochs, sample-weighted mean
  fedprox        fedavg plus a proximal term in the local objective
  random_topk    uniform random k clients, base epochs, sample-weighted mean
  topk_only      score top-k selection, base epochs, sample-weighted mean
  adaptive_only  all clients, adaptive epochs, sample-weighted mean
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .accounting import (
    CommMode,
    TrialSummary,
    comm_cost_round,
    simulate_client_time,
    summarize_trials,
)
from .datasets import (
    DataMode,
    DataSpec,
    FederatedData,
    LatencyPerturbation,
    load_feature_csv,
    synthesize_noniid,
)
from .devices import DeviceProfile, HardwareScore, ScoreWeights, energy_proxy, score_fleet
from .scheduling import (
    FairnessTracker,
    adaptive_epochs,
    jain_index,
    select_all,
    select_random_k,
    select_top_k,
)
from .training import ModelParams, TrainSpec, evaluate, init_model, local_train

# Substream labels: data split, model init, batch shuffles, random selection,
# latency jitter. Fixed so new streams can be added without moving old ones.
STREAM_DATA = 0
STREAM_INIT = 1
STREAM_SHUFFLE = 2
STREAM_SELECT = 3
STREAM_LATENCY = 4


def derive_seed(root_seed: int, stream: int, *key: int) -> int:
    """Integer seed for one named substream of a trial's root seed."""
    return int(np.random.SeedSequence((root_seed, stream, *key)).generate_state(1)[0])


class Method(str, Enum):
    HWFL = "hwfl"
    FEDAVG = "fedavg"
    FEDPROX = "fedprox"
    RANDOM_TOPK = "random_topk"
    TOPK_ONLY = "topk_only"
    ADAPTIVE_ONLY = "adaptive_only"


SELECTS_TOP_K = {Method.HWFL, Method.TOPK_ONLY}
SELECTS_RANDOM_K = {Method.RANDOM_TOPK}
USES_ADAPTIVE_EPOCHS = {Method.HWFL, Method.ADAPTIVE_ONLY}


@dataclass(frozen=True)
class TrainDefaults:
    learning_rate: float = 0.1
    batch_size: int = 32
    hidden_dim: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one method's multi-trial experiment."""

    method: Method
    n_rounds: int
    k: int
    e_base: int
    weights: ScoreWeights
    lam: float
    prox_mu: float
    comm_mode: CommMode
    fleet: tuple[DeviceProfile, ...]
    data_spec: DataSpec
    train: TrainDefaults
    seeds: tuple[int, ...]
    model_size_mb: float
    latency_perturbation: LatencyPerturbation = LatencyPerturbation()
    raw_efficiency: bool = False

    def validate(self) -> None:
        if not self.fleet:
            raise ValueError("empty fleet")
        if not 1 <= self.k <= len(self.fleet):
            raise ValueError(f"k={self.k} out of range for fleet of {len(self.fleet)} clients")
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if self.e_base < 1:
            raise ValueError("e_base must be >= 1")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be non-negative")
        if self.model_size_mb <= 0:
            raise ValueError("model_size_mb must be positive")
        if self.lam < 0 or self.prox_mu < 0:
            raise ValueError("lambda and prox_mu must be non-negative")
        if self.data_spec.mode is not DataMode.CSV and self.data_spec.n_clients != len(
            self.fleet
        ):
            raise ValueError(
                f"data spec describes {self.data_spec.n_clients} clients but the "
                f"fleet has {len(self.fleet)}"
            )


@dataclass
class RoundMetrics:
    """Everything recorded about one completed round."""

    round_index: int
    selected: tuple[int, ...]
    epochs: tuple[int, ...]
    sim_time_s: float
    comm_mb: float
    val_accuracy: float
    val_macro_f1: float
    val_balanced_acc: float
    jain: float
    energy_proxy_total: float


@dataclass
class ExperimentState:
    """Mutable per-trial state owned by the single round driver."""

    root_seed: int
    global_params: ModelParams
    tracker: FairnessTracker
    data: FederatedData
    base_scores: list[HardwareScore]


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rounds_by_seed: dict[int, list[RoundMetrics]]
    summary: TrialSummary


def aggregate_fedavg(updates: Sequence[tuple[ModelParams, int]]) -> ModelParams:
    """Sample-count-weighted mean of client parameter vectors."""
    if not updates:
        raise ValueError("no updates to aggregate")
    shape_tag = updates[0][0].shape_tag
    total = sum(n for _, n in updates)
    if total <= 0:
        raise ValueError("total sample count must be positive")
    out = np.zeros_like(updates[0][0].values)
    for params, n in updates:
        if params.shape_tag != shape_tag:
            raise ValueError("updates disagree on parameter shape")
        out += (n / total) * params.values
    return ModelParams(values=out, shape_tag=shape_tag)


def aggregate_hwfl(updates: Sequence[tuple[ModelParams, int, float]]) -> ModelParams:
    """Convex combination with weights ``n_i * score_i`` over the selected set.

    Every score must be positive, otherwise the weights would not form a
    convex combination.
    """
    if not updates:
        raise ValueError("no updates to aggregate")
    shape_tag = updates[0][0].shape_tag
    for _, _, score in updates:
        if score <= 0:
            raise ValueError(
                f"score-weighted aggregation requires positive scores, got {score}"
            )
    total = sum(n * s for _, n, s in updates)
    out = np.zeros_like(updates[0][0].values)
    for params, n, s in updates:
        if params.shape_tag != shape_tag:
            raise ValueError("updates disagree on parameter shape")
        out += (n * s / total) * params.values
    return ModelParams(values=out, shape_tag=shape_tag)


def build_data(config: ExperimentConfig, root_seed: int) -> FederatedData:
    """Materialize the trial's datasets from the data substream only."""
    data_seed = derive_seed(root_seed, STREAM_DATA)
    if config.data_spec.mode is DataMode.CSV:
        return load_feature_csv(config.data_spec.csv_path, seed=data_seed)
    return synthesize_noniid(config.data_spec, seed=data_seed)


def _effective_profiles(
    config: ExperimentConfig, root_seed: int, round_index: int
) -> list[DeviceProfile]:
    from .datasets import perturb_latency

    if not config.latency_perturbation.enabled:
        return list(config.fleet)
    lat_seed = derive_seed(root_seed, STREAM_LATENCY)
    return [
        perturb_latency(p, config.latency_perturbation, round_index, lat_seed)
        for p in config.fleet
    ]


def run_round(
    state: ExperimentState, config: ExperimentConfig, round_index: int
) -> tuple[ModelParams, RoundMetrics]:
    """Execute one round: select, train locally, aggregate, account.

    Returns the new global model and the round's metrics; the fairness tracker
    inside ``state`` is updated in place. Clients are processed in ascending
    client_id order, which also fixes the aggregation order.
    """
    method = config.method
    profiles = _effective_profiles(config, state.root_seed, round_index)
    if config.latency_perturbation.enabled:
        scores = score_fleet(profiles, config.weights, config.raw_efficiency)
    else:
        scores = state.base_scores
    score_by_id = {s.client_id: s.score for s in scores}
    client_ids = [p.client_id for p in profiles]

    if method in SELECTS_TOP_K:
        selected = select_top_k(scores, config.k)
    elif method in SELECTS_RANDOM_K:
        rng = np.random.default_rng(
            np.random.SeedSequence(
                (state.root_seed, STREAM_SELECT, round_index)
            )
        )
        selected = select_random_k(client_ids, config.k, rng)
    else:
        selected = select_all(client_ids)

    if method in USES_ADAPTIVE_EPOCHS:
        s_max = max(score_by_id.values())
        epochs = {cid: adaptive_epochs(score_by_id[cid], s_max, config.e_base) for cid in selected}
    else:
        epochs = {cid: config.e_base for cid in selected}

    datasets = {ds.client_id: ds for ds in state.data.clients}
    prox_mu = config.prox_mu if method is Method.FEDPROX else 0.0
    updates = []
    for cid in selected:
        spec = TrainSpec(
            epochs=epochs[cid],
            learning_rate=config.train.learning_rate,
            batch_size=config.train.batch_size,
            prox_mu=prox_mu,
            seed=derive_seed(state.root_seed, STREAM_SHUFFLE, cid, round_index),
        )
        trained, stats = local_train(state.global_params, datasets[cid], spec)
        updates.append((cid, trained, stats.n_samples))

    if method is Method.HWFL:
        new_global = aggregate_hwfl(
            [(params, n, score_by_id[cid]) for cid, params, n in updates]
        )
    else:
        new_global = aggregate_fedavg([(params, n) for cid, params, n in updates])

    profile_by_id = {p.client_id: p for p in profiles}
    sim_time = max(
        simulate_client_time(profile_by_id[cid], epochs[cid]) for cid in selected
    )
    comm = comm_cost_round(len(selected), config.model_size_mb, config.comm_mode)
    energy = sum(energy_proxy(profile_by_id[cid], epochs[cid]) for cid in selected)
    state.tracker.record(selected)
    metrics_eval = evaluate(new_global, state.data.validation)

    metrics = RoundMetrics(
        round_index=round_index,
        selected=tuple(selected),
        epochs=tuple(epochs[cid] for cid in selected),
        sim_time_s=sim_time,
        comm_mb=comm,
        val_accuracy=metrics_eval.accuracy,
        val_macro_f1=metrics_eval.macro_f1,
        val_balanced_acc=metrics_eval.balanced_accuracy,
        jain=jain_index(state.tracker),
        energy_proxy_total=energy,
    )
    return new_global, metrics


def run_trial(config: ExperimentConfig, root_seed: int) -> list[RoundMetrics]:
    """Run all rounds of one trial seed and return the round series."""
    data = build_data(config, root_seed)
    if data.validation.n_samples == 0:
        raise ValueError("validation pool is empty; increase samples_per_client")
    dataset_ids = {ds.client_id for ds in data.clients}
    fleet_ids = {p.client_id for p in config.fleet}
    if dataset_ids != fleet_ids:
        raise ValueError(
            f"dataset clients {sorted(dataset_ids)} do not match fleet clients "
            f"{sorted(fleet_ids)}"
        )
    if data.label_names is not None:
        n_classes = len(data.label_names)
    else:
        n_classes = config.data_spec.n_classes
    shape_tag = (data.validation.features.shape[1], config.train.hidden_dim, n_classes)
    state = ExperimentState(
        root_seed=root_seed,
        global_params=init_model(shape_tag, derive_seed(root_seed, STREAM_INIT)),
        tracker=FairnessTracker.fresh(p.client_id for p in config.fleet),
        data=data,
        base_scores=score_fleet(list(config.fleet), config.weights, config.raw_efficiency),
    )
    series = []
    for t in range(config.n_rounds):
        state.global_params, metrics = run_round(state, config, t)
        series.append(metrics)
    return series


def trial_final_metrics(series: Sequence[RoundMetrics]) -> dict[str, float]:
    """Flat per-trial summary row: final-round metrics plus cumulative totals.

    Totals use compensated summation so T identical rounds sum to exactly
    T times the per-round value.
    """
    last = series[-1]
    time_total = math.fsum(m.sim_time_s for m in series)
    return {
        "final_accuracy": last.val_accuracy,
        "final_macro_f1": last.val_macro_f1,
        "final_balanced_acc": last.val_balanced_acc,
        "final_jain": last.jain,
        "time_total_s": time_total,
        "time_per_round_s": time_total / len(series),
        "comm_total_mb": math.fsum(m.comm_mb for m in series),
        "energy_total": math.fsum(m.energy_proxy_total for m in series),
    }


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every trial seed and summarize final metrics across seeds."""
    config.validate()
    rounds_by_seed: dict[int, list[RoundMetrics]] = {}
    finals = []
    for seed in config.seeds:
        series = run_trial(config, seed)
        rounds_by_seed[seed] = series
        finals.append(trial_final_metrics(series))
    return ExperimentResult(
        config=config,
        rounds_by_seed=rounds_by_seed,
        summary=summarize_trials(finals),
    )
