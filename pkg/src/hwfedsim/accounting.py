"""Simulated time and communication models, plus comparison statistics.

Time model: one client's round contribution is ``epochs * epoch_time_s`` plus a
single latency charge (broadcast and upload folded into one round trip); the
round's duration is the slowest selected client. Communication is accounted in
megabytes of model transfers, never transmitted.

The t-distribution tail needed by the Welch test is evaluated through the
regularized incomplete beta function (continued fraction, modified Lentz), so
the module has no statistics dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .devices import DeviceProfile


class CommMode(str, Enum):
    """Per-round communication accounting rule.

    SHARED_BROADCAST: one downlink broadcast plus one upload per selected
    client, ``(|S| + 1) * model_size``.
    SYMMETRIC: a download and an upload per selected client,
    ``2 * |S| * model_size``.
    """

    SHARED_BROADCAST = "shared_broadcast"
    SYMMETRIC = "symmetric"


def simulate_client_time(
    profile: DeviceProfile, epochs: int, latency_charges: float = 1.0
) -> float:
    """Seconds for one client to finish a round: compute plus latency.

    ``latency_charges`` scales how many round trips are billed per round
    (default one); exposed for sensitivity studies.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    return epochs * profile.epoch_time_s + latency_charges * profile.latency_ms / 1000.0


def round_time(
    selected: Sequence[DeviceProfile],
    epochs: Mapping[int, int],
    latency_charges: float = 1.0,
) -> float:
    """Synchronous round duration: the slowest selected client's time."""
    if not selected:
        raise ValueError("round_time requires a non-empty selection")
    return max(
        simulate_client_time(p, epochs[p.client_id], latency_charges) for p in selected
    )


def comm_cost_round(n_selected: int, model_size_mb: float, mode: CommMode) -> float:
    """Megabytes transferred in one round under the given accounting mode."""
    if n_selected < 1:
        raise ValueError(f"n_selected must be >= 1, got {n_selected}")
    if mode is CommMode.SHARED_BROADCAST:
        return (n_selected + 1) * model_size_mb
    return 2 * n_selected * model_size_mb


# --- t-distribution machinery ---

_BETACF_MAX_ITER = 300
_BETACF_EPS = 3e-15
_BETACF_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta (modified Lentz).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_FPMIN:
        d = _BETACF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed for a={a} b={b} x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("incomplete beta requires a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the side of the symmetry where the continued fraction converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T_df| >= |t|) for a Student t variable with df degrees of freedom."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    """Student t cumulative distribution function."""
    tail = 0.5 * t_two_sided_p(t, df)
    return 1.0 - tail if t >= 0 else tail


# --- sample statistics ---


def _mean_var(sample: Sequence[float]) -> tuple[float, float]:
    n = len(sample)
    mean = sum(sample) / n
    var = sum((x - mean) ** 2 for x in sample) / (n - 1)
    return mean, var


def welch_t(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, float]:
    """Welch's unequal-variance t statistic and two-sided p-value.

    Degrees of freedom follow Welch-Satterthwaite. Requires at least two
    observations per sample and positive variance in at least one of them.
    """
    na, nb = len(sample_a), len(sample_b)
    if na < 2 or nb < 2:
        raise ValueError(f"welch_t needs >= 2 observations per sample, got {na} and {nb}")
    mean_a, var_a = _mean_var(sample_a)
    mean_b, var_b = _mean_var(sample_b)
    if var_a == 0.0 and var_b == 0.0:
        raise ValueError("degenerate samples: both variances are zero")
    sa2 = var_a / na
    sb2 = var_b / nb
    se = math.sqrt(sa2 + sb2)
    t = (mean_a - mean_b) / se
    df = (sa2 + sb2) ** 2 / (sa2**2 / (na - 1) + sb2**2 / (nb - 1))
    return t, t_two_sided_p(t, df)


def cohens_d(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """Effect size: mean difference over the (n-1)-weighted pooled std."""
    na, nb = len(sample_a), len(sample_b)
    if na < 2 or nb < 2:
        raise ValueError(f"cohens_d needs >= 2 observations per sample, got {na} and {nb}")
    mean_a, var_a = _mean_var(sample_a)
    mean_b, var_b = _mean_var(sample_b)
    pooled_var = ((na - 1) * var_a + (nb - 1) * var_b) / (na + nb - 2)
    if pooled_var <= 0.0:
        raise ValueError("zero pooled variance")
    return (mean_a - mean_b) / math.sqrt(pooled_var)


@dataclass(frozen=True)
class TrialSummary:
    """Mean and unbiased std per metric across trial seeds.

    ``degenerate`` marks a single-seed summary, whose stds are reported as 0.
    """

    per_seed: tuple[dict[str, float], ...]
    mean: dict[str, float]
    std: dict[str, float]
    degenerate: bool


def summarize_trials(per_seed: Sequence[Mapping[str, float]]) -> TrialSummary:
    """Aggregate per-seed final metrics into mean and std columns.

    Every row must carry the same metric keys. With a single seed the std
    columns are 0 and the summary is flagged degenerate.
    """
    if not per_seed:
        raise ValueError("summarize_trials requires at least one seed row")
    keys = list(per_seed[0].keys())
    for row in per_seed[1:]:
        if list(row.keys()) != keys:
            raise ValueError("per-seed rows disagree on metric keys")
    n = len(per_seed)
    mean = {k: sum(row[k] for row in per_seed) / n for k in keys}
    if n == 1:
        std = {k: 0.0 for k in keys}
    else:
        std = {
            k: math.sqrt(sum((row[k] - mean[k]) ** 2 for row in per_seed) / (n - 1))
            for k in keys
        }
    return TrialSummary(
        per_seed=tuple(dict(row) for row in per_seed),
        mean=mean,
        std=std,
        degenerate=(n == 1),
    )
