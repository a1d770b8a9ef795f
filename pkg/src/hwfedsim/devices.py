"""Client hardware profiles: normalization, scoring, and energy proxies.

A fleet is a list of :class:`DeviceProfile` objects. Profiles are normalized
against the fleet they belong to (max-normalization for CPU, RAM, and latency;
efficiency as the ratio of the fleet's fastest epoch time to the client's own),
then combined into a single scalar score that rewards compute capacity and
training efficiency while penalizing network latency.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DeviceProfile:
    """Static hardware description of one client.

    Attributes:
        client_id: Non-negative integer id, unique within a fleet.
        cpu_cores: Number of CPU cores.
        ram_gb: Available memory in gigabytes.
        epoch_time_s: Seconds to run one local training epoch.
        latency_ms: Round-trip network latency in milliseconds.
    """

    client_id: int
    cpu_cores: int
    ram_gb: float
    epoch_time_s: float
    latency_ms: float

    def __post_init__(self) -> None:
        if self.client_id < 0:
            raise ValueError(f"client {self.client_id}: client_id must be non-negative")
        for field in ("cpu_cores", "ram_gb", "epoch_time_s", "latency_ms"):
            value = getattr(self, field)
            if not value > 0:
                raise ValueError(
                    f"client {self.client_id}: {field} must be positive, got {value}"
                )


@dataclass(frozen=True)
class NormalizedProfile:
    """Fleet-relative profile with every component in (0, 1].

    ``client_id`` tags the owning profile so scores can be attributed; the four
    hat-values are the normalized CPU, RAM, training-efficiency, and latency
    terms. Within a fleet at least one client attains 1.0 in each component.
    """

    client_id: int
    cpu_hat: float
    ram_hat: float
    eff_hat: float
    lat_hat: float


@dataclass(frozen=True)
class ScoreWeights:
    """Non-negative weights for the four score components.

    ``alpha`` weights CPU, ``beta`` RAM, ``gamma`` training efficiency, and
    ``delta`` penalizes latency. At least one weight must be positive.
    """

    alpha: float = 0.4
    beta: float = 0.2
    gamma: float = 0.3
    delta: float = 0.1

    def __post_init__(self) -> None:
        for field in ("alpha", "beta", "gamma", "delta"):
            if getattr(self, field) < 0:
                raise ValueError(f"score weight {field} must be non-negative")
        if self.alpha + self.beta + self.gamma + self.delta <= 0:
            raise ValueError("score weights must not all be zero")


@dataclass(frozen=True)
class HardwareScore:
    client_id: int
    score: float


def normalize_fleet(profiles: list[DeviceProfile]) -> list[NormalizedProfile]:
    """Normalize every profile against the fleet's extremes.

    CPU, RAM, and latency are divided by their fleet maxima. The efficiency
    term is ``min_j epoch_time_j / epoch_time_i`` so that the fastest client
    scores 1.0 and slower clients decay toward 0 while staying positive.
    Output order matches input order.

    Raises:
        ValueError: on an empty fleet or duplicate client ids.
    """
    if not profiles:
        raise ValueError("empty fleet")
    ids = [p.client_id for p in profiles]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate client_id in fleet: {sorted(ids)}")
    cpu_max = max(p.cpu_cores for p in profiles)
    ram_max = max(p.ram_gb for p in profiles)
    lat_max = max(p.latency_ms for p in profiles)
    t_min = min(p.epoch_time_s for p in profiles)
    return [
        NormalizedProfile(
            client_id=p.client_id,
            cpu_hat=p.cpu_cores / cpu_max,
            ram_hat=p.ram_gb / ram_max,
            eff_hat=t_min / p.epoch_time_s,
            lat_hat=p.latency_ms / lat_max,
        )
        for p in profiles
    ]


def hardware_score(norm: NormalizedProfile, weights: ScoreWeights) -> HardwareScore:
    """Combine a normalized profile into one scalar score.

    ``alpha * cpu + beta * ram + gamma * eff - delta * lat``. With normalized
    inputs the score lies in ``(-delta, alpha + beta + gamma]``.
    """
    score = (
        weights.alpha * norm.cpu_hat
        + weights.beta * norm.ram_hat
        + weights.gamma * norm.eff_hat
        - weights.delta * norm.lat_hat
    )
    return HardwareScore(client_id=norm.client_id, score=score)


def score_fleet(
    profiles: list[DeviceProfile],
    weights: ScoreWeights,
    raw_efficiency: bool = False,
) -> list[HardwareScore]:
    """Score every client in a fleet; output order matches input order.

    With ``raw_efficiency=True`` the efficiency term uses the unnormalized
    reciprocal epoch time (``gamma / epoch_time_s``) instead of the bounded
    ratio form. This makes the score unit-dependent and unbounded; it exists
    for fidelity experiments only and is off by default.
    """
    norms = normalize_fleet(profiles)
    if not raw_efficiency:
        return [hardware_score(n, weights) for n in norms]
    scores = []
    for p, n in zip(profiles, norms):
        score = (
            weights.alpha * n.cpu_hat
            + weights.beta * n.ram_hat
            + weights.gamma / p.epoch_time_s
            - weights.delta * n.lat_hat
        )
        scores.append(HardwareScore(client_id=p.client_id, score=score))
    return scores


def energy_proxy(profile: DeviceProfile, epochs: int) -> float:
    """Relative energy indicator: ``cpu_cores * epoch_time_s * epochs``.

    The proportionality constant is fixed at 1; the value is reported for
    comparison between schedules, never optimized, and is not joules.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    return profile.cpu_cores * profile.epoch_time_s * epochs
