"""Declarative experiment configuration: schema, defaults, and resolution.

A config file is one JSON document matching :class:`RunConfig`. The same model
backs the service's request bodies, so a file and a request validate
identically and errors carry field paths. ``resolve_config`` turns one
validated document into per-method :class:`ExperimentConfig` objects ready for
the federation driver.

The default fleet bundles five representative edge devices (laptop, tablet,
phones of varying RAM/latency). Their per-epoch training times are not
measured values: they are assigned inversely proportional to core count
(8 / cpu_cores seconds) and can be overridden inline or via ``fleet_csv``.
"""

from __future__ import annotations

import importlib.resources
import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .accounting import CommMode
from .datasets import DataMode, DataSpec, LatencyPerturbation, load_fleet_csv
from .devices import DeviceProfile, ScoreWeights
from .federation import ExperimentConfig, Method, TrainDefaults

DEFAULT_FLEET = [
    # client_id, cpu_cores, ram_gb, epoch_time_s, latency_ms
    (0, 16, 32.0, 0.5, 170.0),  # laptop, high end
    (1, 4, 32.0, 2.0, 183.0),  # tablet
    (2, 4, 16.0, 2.0, 200.0),  # phone, low RAM
    (3, 2, 32.0, 4.0, 261.0),  # legacy phone
    (4, 4, 32.0, 2.0, 132.0),  # phone, low latency
]


class WeightsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(0.4, ge=0)
    beta: float = Field(0.2, ge=0)
    gamma: float = Field(0.3, ge=0)
    delta: float = Field(0.1, ge=0)

    @model_validator(mode="after")
    def _some_weight_positive(self) -> "WeightsModel":
        if self.alpha + self.beta + self.gamma + self.delta <= 0:
            raise ValueError("score weights must not all be zero")
        return self


class FleetEntryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    client_id: int = Field(ge=0)
    cpu_cores: int = Field(gt=0)
    ram_gb: float = Field(gt=0)
    epoch_time_s: float = Field(gt=0)
    latency_ms: float = Field(gt=0)


class DataModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: DataMode = DataMode.SESSION_SPLIT
    n_classes: int = Field(4, ge=2)
    input_dim: int = Field(40, ge=1)
    samples_per_client: int = Field(200, ge=5)
    dirichlet_alpha: float = Field(0.5, gt=0)
    class_separation: float = Field(2.0, gt=0)
    csv_path: str | None = None

    @model_validator(mode="after")
    def _csv_needs_path(self) -> "DataModel":
        if self.mode is DataMode.CSV and not self.csv_path:
            raise ValueError("csv mode requires csv_path")
        return self


class TrainModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(0.1, ge=0)
    batch_size: int = Field(32, ge=1)
    hidden_dim: int = Field(0, ge=0)


class LatencyModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    enabled: bool = False
    sigma: float = Field(0.0, ge=0)


class RunConfig(BaseModel):
    """Schema of one experiment config file (and service request body)."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    methods: list[Method] = Field(default=[Method.FEDAVG, Method.HWFL], min_length=1)
    n_rounds: int = Field(50, ge=1)
    k: int = Field(3, ge=1)
    e_base: int = Field(4, ge=1)
    weights: WeightsModel = WeightsModel()
    trade_off_lambda: float = Field(0.1, ge=0, alias="lambda")
    prox_mu: float = Field(0.01, ge=0)
    comm_mode: CommMode = CommMode.SYMMETRIC
    fleet: list[FleetEntryModel] | None = None
    fleet_csv: str | None = None
    data: DataModel = DataModel()
    train: TrainModel = TrainModel()
    seeds: list[int] = Field(default=[1, 2, 3, 4, 5], min_length=1)
    model_size_mb: float = Field(0.04762, gt=0)
    latency_perturbation: LatencyModel = LatencyModel()
    raw_efficiency: bool = False
    k_values: list[int] | None = None
    alpha_values: list[float] = [0.3, 0.4, 0.5]

    @model_validator(mode="after")
    def _sane(self) -> "RunConfig":
        if self.fleet is not None and self.fleet_csv is not None:
            raise ValueError("give either fleet or fleet_csv, not both")
        if any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be non-negative")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must be distinct")
        if self.fleet is not None:
            if not self.fleet:
                raise ValueError("fleet must not be empty")
            ids = [f.client_id for f in self.fleet]
            if len(set(ids)) != len(ids):
                raise ValueError("fleet client_id values must be unique")
            if self.k > len(self.fleet):
                raise ValueError(
                    f"k={self.k} exceeds fleet size {len(self.fleet)}"
                )
        elif self.fleet_csv is None and self.k > len(DEFAULT_FLEET):
            raise ValueError(
                f"k={self.k} exceeds default fleet size {len(DEFAULT_FLEET)}"
            )
        return self


def default_fleet() -> list[DeviceProfile]:
    return [
        DeviceProfile(
            client_id=cid,
            cpu_cores=cpu,
            ram_gb=ram,
            epoch_time_s=epoch_s,
            latency_ms=lat,
        )
        for cid, cpu, ram, epoch_s, lat in DEFAULT_FLEET
    ]


def load_config_file(path: str | Path) -> RunConfig:
    """Parse and validate a JSON config file."""
    text = Path(path).read_text(encoding="utf-8")
    return RunConfig.model_validate(json.loads(text))


def resolve_fleet(cfg: RunConfig, base_dir: Path | None = None) -> list[DeviceProfile]:
    if cfg.fleet is not None:
        return [DeviceProfile(**f.model_dump()) for f in cfg.fleet]
    if cfg.fleet_csv is not None:
        csv_path = Path(cfg.fleet_csv)
        if base_dir is not None and not csv_path.is_absolute():
            csv_path = base_dir / csv_path
        return load_fleet_csv(csv_path)
    return default_fleet()


def resolve_config(
    cfg: RunConfig, base_dir: Path | None = None
) -> list[ExperimentConfig]:
    """Expand one document into per-method experiment configs.

    Relative ``fleet_csv``/``csv_path`` entries resolve against ``base_dir``
    (normally the config file's directory).
    """
    fleet = resolve_fleet(cfg, base_dir)
    csv_path = cfg.data.csv_path
    if csv_path is not None and base_dir is not None:
        p = Path(csv_path)
        if not p.is_absolute():
            csv_path = str(base_dir / p)
    data_spec = DataSpec(
        mode=cfg.data.mode,
        n_clients=len(fleet),
        n_classes=cfg.data.n_classes,
        input_dim=cfg.data.input_dim,
        samples_per_client=cfg.data.samples_per_client,
        dirichlet_alpha=cfg.data.dirichlet_alpha,
        class_separation=cfg.data.class_separation,
        csv_path=csv_path,
    )
    resolved = []
    for method in cfg.methods:
        experiment = ExperimentConfig(
            method=method,
            n_rounds=cfg.n_rounds,
            k=cfg.k,
            e_base=cfg.e_base,
            weights=ScoreWeights(
                alpha=cfg.weights.alpha,
                beta=cfg.weights.beta,
                gamma=cfg.weights.gamma,
                delta=cfg.weights.delta,
            ),
            lam=cfg.trade_off_lambda,
            prox_mu=cfg.prox_mu,
            comm_mode=cfg.comm_mode,
            fleet=tuple(fleet),
            data_spec=data_spec,
            train=TrainDefaults(
                learning_rate=cfg.train.learning_rate,
                batch_size=cfg.train.batch_size,
                hidden_dim=cfg.train.hidden_dim,
            ),
            seeds=tuple(cfg.seeds),
            model_size_mb=cfg.model_size_mb,
            latency_perturbation=LatencyPerturbation(
                enabled=cfg.latency_perturbation.enabled,
                sigma=cfg.latency_perturbation.sigma,
            ),
            raw_efficiency=cfg.raw_efficiency,
        )
        experiment.validate()
        resolved.append(experiment)
    return resolved


def defaults_json() -> str:
    """The full default config as formatted JSON (for --print-defaults)."""
    return RunConfig().model_dump_json(indent=2, by_alias=True)


def bundled_config_path(name: str) -> Path:
    """Filesystem path of a bundled config or fleet file."""
    root = importlib.resources.files("hwfedsim") / "bundled" / name
    return Path(str(root))
