"""Reproducible non-IID client data: synthetic generators, feature-CSV IO,
fleet-CSV IO, and per-round latency perturbation.

Synthetic features are class-conditional Gaussian clusters with unit noise;
label skew comes either from Dirichlet-sampled class proportions or from a
session-style rotation where client ``i`` over-represents class
``i mod n_classes``. A fixed fraction of every client's data is withheld into
a shared validation pool.

File formats:
  feature CSV  header ``client_id,label,f_0,...,f_{d-1}``
  fleet CSV    header ``client_id,cpu_cores,ram_gb,epoch_time_s,latency_ms``
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .devices import DeviceProfile
from .training import LocalDataset

VALIDATION_FRACTION = 0.2
SESSION_DOMINANT_SHARE = 0.6
VALIDATION_CLIENT_ID = -1


class DataMode(str, Enum):
    DIRICHLET = "dirichlet"
    SESSION_SPLIT = "session_split"
    CSV = "csv"


@dataclass(frozen=True)
class DataSpec:
    """Declarative description of one federated data layout."""

    mode: DataMode
    n_clients: int
    n_classes: int = 4
    input_dim: int = 40
    samples_per_client: int = 200
    dirichlet_alpha: float = 0.5
    class_separation: float = 2.0
    csv_path: str | None = None

    def __post_init__(self) -> None:
        if self.n_clients < 1 or self.n_classes < 2 or self.input_dim < 1:
            raise ValueError("n_clients, n_classes, input_dim must be positive")
        if self.samples_per_client < 1:
            raise ValueError("samples_per_client must be >= 1")
        if self.mode is DataMode.DIRICHLET and self.dirichlet_alpha <= 0:
            raise ValueError("dirichlet mode requires dirichlet_alpha > 0")
        if self.class_separation <= 0:
            raise ValueError("class_separation must be positive")
        if self.mode is DataMode.CSV and not self.csv_path:
            raise ValueError("csv mode requires csv_path")


@dataclass(frozen=True)
class LatencyPerturbation:
    """Optional per-round log-normal jitter on client latency."""

    enabled: bool = False
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass(frozen=True)
class FederatedData:
    """Client training sets plus the shared validation pool."""

    clients: tuple[LocalDataset, ...]
    validation: LocalDataset
    label_names: tuple[str, ...] | None = None


def _largest_remainder_counts(mass: np.ndarray, total: int) -> np.ndarray:
    raw = mass * total
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    # Distribute the remainder to the largest fractional parts, ties by index.
    order = sorted(range(len(mass)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def _split_validation(
    features: np.ndarray, labels: np.ndarray, client_id: int, rng: np.random.Generator
) -> tuple[LocalDataset, np.ndarray, np.ndarray]:
    n = len(labels)
    n_val = int(n * VALIDATION_FRACTION)
    perm = rng.permutation(n)
    val_idx = np.sort(perm[:n_val])
    train_idx = np.sort(perm[n_val:])
    train = LocalDataset(
        features=features[train_idx], labels=labels[train_idx], client_id=client_id
    )
    return train, features[val_idx], labels[val_idx]


def synthesize_noniid(spec: DataSpec, seed: int) -> FederatedData:
    """Generate skewed client datasets from class-conditional Gaussians.

    Class means are random unit directions scaled by ``class_separation``;
    sample noise is standard normal. Per-client label mixes follow the spec's
    mode. 20% of each client's samples are withheld into the validation pool.
    Deterministic given (spec, seed).
    """
    if spec.mode is DataMode.CSV:
        raise ValueError("csv mode is served by load_feature_csv, not the synthesizer")
    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    c, d, n = spec.n_classes, spec.input_dim, spec.samples_per_client

    directions = rng.standard_normal((c, d))
    means = spec.class_separation * directions / np.linalg.norm(
        directions, axis=1, keepdims=True
    )

    clients: list[LocalDataset] = []
    val_feats: list[np.ndarray] = []
    val_labels: list[np.ndarray] = []
    for cid in range(spec.n_clients):
        if spec.mode is DataMode.SESSION_SPLIT:
            mass = np.full(c, (1.0 - SESSION_DOMINANT_SHARE) / (c - 1))
            mass[cid % c] = SESSION_DOMINANT_SHARE
            counts = _largest_remainder_counts(mass, n)
            if counts.min() < 1:
                raise ValueError(
                    f"samples_per_client={n} too small to populate all "
                    f"{c} classes in the session split"
                )
            labels = np.repeat(np.arange(c), counts)
            rng.shuffle(labels)
        else:
            proportions = rng.dirichlet(np.full(c, spec.dirichlet_alpha))
            labels = rng.choice(c, size=n, p=proportions)
        features = means[labels] + rng.standard_normal((n, d))
        train, vf, vl = _split_validation(features, labels, cid, rng)
        clients.append(train)
        val_feats.append(vf)
        val_labels.append(vl)

    validation = LocalDataset(
        features=np.concatenate(val_feats) if val_feats else np.empty((0, d)),
        labels=np.concatenate(val_labels) if val_labels else np.empty(0, dtype=int),
        client_id=VALIDATION_CLIENT_ID,
    )
    if validation.n_samples == 0:
        warnings.warn("validation pool is empty", stacklevel=2)
    return FederatedData(clients=tuple(clients), validation=validation)


def _sorted_label_names(raw_labels: set[str]) -> list[str]:
    # Integer-looking labels sort numerically so written indices round-trip;
    # anything else sorts alphabetically.
    try:
        return sorted(raw_labels, key=int)
    except ValueError:
        return sorted(raw_labels)


def load_feature_csv(
    path: str | Path, seed: int = 0, val_fraction: float = VALIDATION_FRACTION
) -> FederatedData:
    """Load pre-extracted features grouped by client.

    Labels are mapped to contiguous indices (numeric labels in numeric order,
    otherwise alphabetically) and the mapping is returned as ``label_names``.
    ``val_fraction`` of each client's rows is withheld, seeded, into the
    validation pool. Parse failures name the offending 1-based line.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for required in ("client_id", "label"):
            if required not in header:
                raise ValueError(f"{path}: missing column '{required}'")
        cid_col = header.index("client_id")
        label_col = header.index("label")
        feature_cols = [i for i in range(len(header)) if i not in (cid_col, label_col)]
        if not feature_cols:
            raise ValueError(f"{path}: no feature columns found")

        rows: list[tuple[int, str, list[float]]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                cid = int(row[cid_col])
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: non-integer client_id {row[cid_col]!r}"
                ) from None
            label = row[label_col].strip()
            if not label:
                raise ValueError(f"{path}: line {lineno}: empty label")
            feats = []
            for i in feature_cols:
                try:
                    feats.append(float(row[i]))
                except ValueError:
                    raise ValueError(
                        f"{path}: line {lineno}: non-numeric feature "
                        f"{row[i]!r} in column {header[i]}"
                    ) from None
            rows.append((cid, label, feats))

    if not rows:
        raise ValueError(f"{path}: no data rows")
    label_names = _sorted_label_names({label for _, label, _ in rows})
    label_index = {name: i for i, name in enumerate(label_names)}
    d = len(feature_cols)

    rng = np.random.default_rng(np.random.SeedSequence((seed,)))
    clients: list[LocalDataset] = []
    val_feats: list[np.ndarray] = []
    val_labels: list[np.ndarray] = []
    for cid in sorted({cid for cid, _, _ in rows}):
        own = [(label, feats) for c, label, feats in rows if c == cid]
        features = np.array([feats for _, feats in own], dtype=float)
        labels = np.array([label_index[label] for label, _ in own], dtype=int)
        n_val = int(len(own) * val_fraction)
        perm = rng.permutation(len(own))
        val_idx = np.sort(perm[:n_val])
        train_idx = np.sort(perm[n_val:])
        clients.append(
            LocalDataset(
                features=features[train_idx], labels=labels[train_idx], client_id=cid
            )
        )
        val_feats.append(features[val_idx])
        val_labels.append(labels[val_idx])

    validation = LocalDataset(
        features=np.concatenate(val_feats) if val_feats else np.empty((0, d)),
        labels=np.concatenate(val_labels) if val_labels else np.empty(0, dtype=int),
        client_id=VALIDATION_CLIENT_ID,
    )
    if validation.n_samples == 0:
        warnings.warn("validation pool is empty", stacklevel=2)
    return FederatedData(
        clients=tuple(clients), validation=validation, label_names=tuple(label_names)
    )


def write_feature_csv(
    path: str | Path,
    datasets: Sequence[LocalDataset],
    label_names: Sequence[str] | None = None,
) -> None:
    """Write datasets in the feature-CSV schema (one row per sample)."""
    if not datasets:
        raise ValueError("nothing to write")
    d = datasets[0].features.shape[1]
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["client_id", "label"] + [f"f_{i}" for i in range(d)])
        for ds in datasets:
            for feats, label in zip(ds.features, ds.labels):
                name = label_names[label] if label_names else str(int(label))
                writer.writerow(
                    [ds.client_id, name] + [repr(float(v)) for v in feats]
                )


def perturb_latency(
    profile: DeviceProfile,
    perturbation: LatencyPerturbation,
    round_index: int,
    seed: int,
) -> DeviceProfile:
    """Multiply latency by a mean-preserving log-normal factor for one round.

    The factor is ``exp(g)`` with ``g ~ Normal(-sigma^2 / 2, sigma^2)`` drawn
    from a stream keyed by (seed, client, round), so repeated calls agree and
    other clients/rounds are unaffected. Disabled or zero-sigma perturbation
    returns the profile unchanged.
    """
    if not perturbation.enabled or perturbation.sigma == 0.0:
        return profile
    sigma = perturbation.sigma
    rng = np.random.default_rng(
        np.random.SeedSequence((seed, profile.client_id, round_index))
    )
    g = rng.normal(loc=-0.5 * sigma * sigma, scale=sigma)
    return replace(profile, latency_ms=profile.latency_ms * float(np.exp(g)))


def load_fleet_csv(path: str | Path) -> list[DeviceProfile]:
    """Load a fleet definition table into device profiles."""
    path = Path(path)
    required = ["client_id", "cpu_cores", "ram_gb", "epoch_time_s", "latency_ms"]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing column '{missing[0]}'")
        profiles = []
        for lineno, row in enumerate(reader, start=2):
            try:
                profiles.append(
                    DeviceProfile(
                        client_id=int(row["client_id"]),
                        cpu_cores=int(row["cpu_cores"]),
                        ram_gb=float(row["ram_gb"]),
                        epoch_time_s=float(row["epoch_time_s"]),
                        latency_ms=float(row["latency_ms"]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    if not profiles:
        raise ValueError(f"{path}: empty fleet")
    return profiles
