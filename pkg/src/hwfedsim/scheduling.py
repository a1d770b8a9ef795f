"""Client selection, adaptive epoch budgets, fairness, and plan objectives.

Selection strategies are pure functions of the scores (or of an injected
random generator for the random baseline). The round-plan objective combines
the makespan of the selected set with a weighted communication load; a small-N
exhaustive optimizer serves as the exact reference against which the scoring
heuristic can be measured.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .accounting import CommMode, comm_cost_round, simulate_client_time
from .devices import DeviceProfile, HardwareScore, ScoreWeights, score_fleet

BRUTE_FORCE_MAX_CLIENTS = 12


@dataclass(frozen=True)
class RoundPlan:
    """Selected clients and their per-client epoch budgets for one round."""

    round_index: int
    selected: tuple[int, ...]
    epochs: dict[int, int]

    def __post_init__(self) -> None:
        if self.round_index < 0:
            raise ValueError("round_index must be non-negative")
        if not self.selected:
            raise ValueError("a round plan must select at least one client")
        if set(self.epochs) != set(self.selected):
            raise ValueError("epoch budgets must cover exactly the selected clients")
        for cid, e in self.epochs.items():
            if e < 1:
                raise ValueError(f"client {cid}: epoch budget must be >= 1, got {e}")


@dataclass
class FairnessTracker:
    """Selection frequency per client, including never-selected clients."""

    counts: dict[int, int]
    n_clients: int

    @classmethod
    def fresh(cls, client_ids: Iterable[int]) -> "FairnessTracker":
        counts = {cid: 0 for cid in client_ids}
        return cls(counts=counts, n_clients=len(counts))

    def record(self, selected: Iterable[int]) -> None:
        for cid in selected:
            if cid not in self.counts:
                raise ValueError(f"unknown client_id {cid} recorded in fairness tracker")
            self.counts[cid] += 1


@dataclass(frozen=True)
class ObjectiveReport:
    """Makespan plus lambda-weighted communication load of one plan.

    ``comm_load`` is expressed in model-size units (model size fixed at 1).
    """

    makespan_s: float
    comm_load: float
    lam: float
    objective: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "objective", self.makespan_s + self.lam * self.comm_load)


def select_top_k(scores: Sequence[HardwareScore], k: int) -> list[int]:
    """The k highest-scoring clients, ties toward lower ids, sorted by id."""
    if not 1 <= k <= len(scores):
        raise ValueError(f"k={k} out of range for fleet of {len(scores)} clients")
    ranked = sorted(scores, key=lambda s: (-s.score, s.client_id))
    return sorted(s.client_id for s in ranked[:k])


def select_random_k(
    client_ids: Sequence[int], k: int, rng: np.random.Generator
) -> list[int]:
    """Uniform sample of k clients without replacement, sorted by id.

    Draws come only from the supplied generator, so the result is a pure
    function of the generator state.
    """
    if not 1 <= k <= len(client_ids):
        raise ValueError(f"k={k} out of range for fleet of {len(client_ids)} clients")
    picked = rng.choice(np.asarray(sorted(client_ids)), size=k, replace=False)
    return sorted(int(c) for c in picked)


def select_all(client_ids: Sequence[int]) -> list[int]:
    """Full participation, sorted by id."""
    return sorted(client_ids)


def adaptive_epochs(score: float, s_max: float, e_base: int) -> int:
    """Scale the base epoch budget by the client's score ratio.

    ``round(e_base * score / s_max)`` with banker's rounding, clamped to a
    minimum of 1 so every selected client trains at least once. The top-scoring
    client (score == s_max) receives exactly ``e_base``.
    """
    if s_max <= 0:
        raise ValueError(
            f"maximum fleet score must be positive for adaptive epochs, got {s_max}"
        )
    if e_base < 1:
        raise ValueError(f"e_base must be >= 1, got {e_base}")
    return max(1, round(e_base * score / s_max))


def jain_index(tracker: FairnessTracker) -> float:
    """Jain fairness of participation counts: (sum f)^2 / (N * sum f^2).

    1.0 means perfectly balanced participation, 1/N a single participant.
    """
    counts = list(tracker.counts.values())
    total = sum(counts)
    if total == 0:
        raise ValueError("no participation recorded")
    return total * total / (tracker.n_clients * sum(c * c for c in counts))


def objective_of_plan(
    plan: RoundPlan,
    profiles: Sequence[DeviceProfile],
    lam: float,
    comm_mode: CommMode,
) -> ObjectiveReport:
    """Evaluate a plan: slowest-client makespan plus weighted comm load."""
    by_id = {p.client_id: p for p in profiles}
    missing = [cid for cid in plan.selected if cid not in by_id]
    if missing:
        raise ValueError(f"plan selects clients not in fleet: {missing}")
    makespan = max(
        simulate_client_time(by_id[cid], plan.epochs[cid]) for cid in plan.selected
    )
    comm_load = comm_cost_round(len(plan.selected), 1.0, comm_mode)
    return ObjectiveReport(makespan_s=makespan, comm_load=comm_load, lam=lam)


def heuristic_schedule(
    profiles: Sequence[DeviceProfile],
    weights: ScoreWeights,
    k: int,
    e_base: int,
    round_index: int = 0,
    raw_efficiency: bool = False,
) -> RoundPlan:
    """Score-based plan: top-k selection with score-proportional epochs."""
    scores = score_fleet(list(profiles), weights, raw_efficiency)
    s_max = max(s.score for s in scores)
    selected = select_top_k(scores, k)
    by_id = {s.client_id: s.score for s in scores}
    epochs = {cid: adaptive_epochs(by_id[cid], s_max, e_base) for cid in selected}
    return RoundPlan(round_index=round_index, selected=tuple(selected), epochs=epochs)


def brute_force_schedule(
    profiles: Sequence[DeviceProfile],
    k_range: Iterable[int],
    epoch_grid: Sequence[int],
    lam: float,
    comm_mode: CommMode,
) -> tuple[RoundPlan, ObjectiveReport]:
    """Exhaustive small-fleet optimum over subsets and epoch assignments.

    Enumerates every non-empty subset whose size falls in ``k_range`` crossed
    with every epoch assignment from ``epoch_grid`` and returns the plan with
    the lowest objective. Ties prefer the smaller subset, then lexicographic
    client ids, then the lexicographically smallest epoch assignment (the grid
    is scanned in ascending order).

    Guarded to fleets of at most 12 clients; the search space is exponential.
    """
    fleet = list(profiles)
    if len(fleet) > BRUTE_FORCE_MAX_CLIENTS:
        raise ValueError(
            f"oracle limit: fleet size {len(fleet)} exceeds {BRUTE_FORCE_MAX_CLIENTS}"
        )
    grid = sorted(set(epoch_grid))
    if not grid:
        raise ValueError("epoch_grid must be non-empty")
    if grid[0] < 1:
        raise ValueError(f"epoch_grid entries must be >= 1, got {grid[0]}")
    sizes = sorted(set(k_range))
    if not sizes or sizes[0] < 1 or sizes[-1] > len(fleet):
        raise ValueError(
            f"k_range {sizes} out of range for fleet of {len(fleet)} clients"
        )

    ids = sorted(p.client_id for p in fleet)
    best: tuple[RoundPlan, ObjectiveReport] | None = None
    for size in sizes:
        for subset in itertools.combinations(ids, size):
            for assignment in itertools.product(grid, repeat=size):
                plan = RoundPlan(
                    round_index=0,
                    selected=subset,
                    epochs=dict(zip(subset, assignment)),
                )
                report = objective_of_plan(plan, fleet, lam, comm_mode)
                if best is None or report.objective < best[1].objective:
                    best = (plan, report)
    assert best is not None
    return best
