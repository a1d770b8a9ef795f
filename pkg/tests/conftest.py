import numpy as np
import pytest

from hwfedsim.accounting import CommMode
from hwfedsim.config import default_fleet
from hwfedsim.datasets import DataMode, DataSpec, LatencyPerturbation
from hwfedsim.devices import DeviceProfile, ScoreWeights
from hwfedsim.federation import ExperimentConfig, Method, TrainDefaults


@pytest.fixture
def fleet():
    """The bundled five-device edge fleet."""
    return default_fleet()


@pytest.fixture
def default_weights():
    return ScoreWeights(alpha=0.4, beta=0.2, gamma=0.3, delta=0.1)


def make_config(method=Method.FEDAVG, **overrides) -> ExperimentConfig:
    """Small, fast experiment config for unit tests."""
    base = dict(
        method=method,
        n_rounds=3,
        k=3,
        e_base=4,
        weights=ScoreWeights(),
        lam=0.1,
        prox_mu=0.01,
        comm_mode=CommMode.SYMMETRIC,
        fleet=tuple(default_fleet()),
        data_spec=DataSpec(
            mode=DataMode.SESSION_SPLIT,
            n_clients=5,
            n_classes=4,
            input_dim=10,
            samples_per_client=40,
            class_separation=2.0,
        ),
        train=TrainDefaults(learning_rate=0.1, batch_size=16, hidden_dim=0),
        seeds=(1, 2),
        model_size_mb=1.0,
        latency_perturbation=LatencyPerturbation(),
        raw_efficiency=False,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def random_fleet(rng: np.random.Generator, n: int) -> list[DeviceProfile]:
    """Random positive fleet for property tests."""
    return [
        DeviceProfile(
            client_id=i,
            cpu_cores=int(rng.integers(1, 33)),
            ram_gb=float(rng.uniform(0.5, 64.0)),
            epoch_time_s=float(rng.uniform(0.1, 10.0)),
            latency_ms=float(rng.uniform(1.0, 500.0)),
        )
        for i in range(n)
    ]
