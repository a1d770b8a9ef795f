"""Local trainer: softmax classifier (optionally one tanh hidden layer),
hand-rolled mini-batch SGD with an optional proximal pull toward the global
model, and evaluation metrics.

Parameters live in a single flat float64 vector described by a
``(input_dim, hidden_dim, n_classes)`` shape tag; ``hidden_dim == 0`` selects
the plain linear (multinomial logistic) model. Gradients are exact, and the
softmax/cross-entropy path uses max-subtraction and log-sum-exp throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ShapeTag = tuple[int, int, int]


def param_count(shape_tag: ShapeTag) -> int:
    d, h, c = shape_tag
    if h == 0:
        return d * c + c
    return d * h + h + h * c + c


@dataclass(frozen=True)
class ModelParams:
    """Flat parameter vector plus the shape tag that interprets it."""

    values: np.ndarray
    shape_tag: ShapeTag

    def __post_init__(self) -> None:
        d, h, c = self.shape_tag
        if d < 1 or c < 2 or h < 0:
            raise ValueError(f"invalid shape_tag {self.shape_tag}")
        if self.values.ndim != 1 or len(self.values) != param_count(self.shape_tag):
            raise ValueError(
                f"parameter vector length {len(self.values)} does not match "
                f"shape_tag {self.shape_tag} (expected {param_count(self.shape_tag)})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("parameter vector contains non-finite entries")


@dataclass(frozen=True)
class LocalDataset:
    """One client's feature matrix and integer class labels.

    Client training sets are non-empty; a zero-row instance is only valid as a
    placeholder validation pool.
    """

    features: np.ndarray
    labels: np.ndarray
    client_id: int

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must align with feature rows")
        if len(self.labels) and self.labels.min() < 0:
            raise ValueError("labels must be non-negative class indices")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class TrainSpec:
    """Local training hyperparameters for one client-round."""

    epochs: int
    learning_rate: float
    batch_size: int
    prox_mu: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.prox_mu < 0:
            raise ValueError("prox_mu must be non-negative")


@dataclass(frozen=True)
class TrainStats:
    final_loss: float
    n_samples: int


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    macro_f1: float
    balanced_accuracy: float


def init_model(shape_tag: ShapeTag, seed: int) -> ModelParams:
    """Symmetric small-uniform initialization, deterministic in the seed."""
    d, h, c = shape_tag
    if d < 1 or c < 2 or h < 0:
        raise ValueError(f"invalid shape_tag {shape_tag}")
    rng = np.random.default_rng(seed)
    values = rng.uniform(-0.05, 0.05, size=param_count(shape_tag))
    return ModelParams(values=values, shape_tag=shape_tag)


def _unpack(values: np.ndarray, shape_tag: ShapeTag):
    d, h, c = shape_tag
    if h == 0:
        w = values[: d * c].reshape(d, c)
        b = values[d * c :]
        return w, b
    o = 0
    w1 = values[o : o + d * h].reshape(d, h)
    o += d * h
    b1 = values[o : o + h]
    o += h
    w2 = values[o : o + h * c].reshape(h, c)
    o += h * c
    b2 = values[o:]
    return w1, b1, w2, b2


def _forward_logits(values: np.ndarray, x: np.ndarray, shape_tag: ShapeTag):
    d, h, c = shape_tag
    if h == 0:
        w, b = _unpack(values, shape_tag)
        return x @ w + b, None
    w1, b1, w2, b2 = _unpack(values, shape_tag)
    hidden = np.tanh(x @ w1 + b1)
    return hidden @ w2 + b2, hidden


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _mean_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(labels)), labels]
    return float(np.mean(log_z - picked))


def loss_and_grad(
    params: ModelParams,
    data: LocalDataset,
    global_ref: ModelParams | None = None,
    prox_mu: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy (plus optional proximal penalty) and its gradient.

    The proximal term is ``(prox_mu / 2) * ||params - global_ref||^2`` over the
    full flat vector; with ``prox_mu == 0`` it contributes exactly nothing to
    either the loss or the gradient.
    """
    if data.n_samples == 0:
        raise ValueError("empty dataset")
    d, h, c = params.shape_tag
    if data.features.shape[1] != d:
        raise ValueError(
            f"feature dim {data.features.shape[1]} does not match model input dim {d}"
        )
    if len(data.labels) and data.labels.max() >= c:
        raise ValueError(f"label {int(data.labels.max())} out of range for {c} classes")
    if prox_mu > 0 and global_ref is None:
        raise ValueError("prox_mu > 0 requires a global reference model")
    if global_ref is not None and global_ref.shape_tag != params.shape_tag:
        raise ValueError("global reference shape does not match parameters")

    x = data.features
    y = data.labels
    n = data.n_samples
    logits, hidden = _forward_logits(params.values, x, params.shape_tag)
    loss = _mean_cross_entropy(logits, y)

    dlogits = _softmax(logits)
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n

    grad = np.empty_like(params.values)
    if h == 0:
        grad[: d * c] = (x.T @ dlogits).ravel()
        grad[d * c :] = dlogits.sum(axis=0)
    else:
        w1, b1, w2, b2 = _unpack(params.values, params.shape_tag)
        dw2 = hidden.T @ dlogits
        db2 = dlogits.sum(axis=0)
        dhidden = dlogits @ w2.T
        dz1 = dhidden * (1.0 - hidden * hidden)
        dw1 = x.T @ dz1
        db1 = dz1.sum(axis=0)
        o = 0
        grad[o : o + d * h] = dw1.ravel()
        o += d * h
        grad[o : o + h] = db1
        o += h
        grad[o : o + h * c] = dw2.ravel()
        o += h * c
        grad[o:] = db2

    if prox_mu > 0:
        diff = params.values - global_ref.values
        loss += 0.5 * prox_mu * float(diff @ diff)
        grad += prox_mu * diff
    return loss, grad


def local_train(
    start: ModelParams, data: LocalDataset, spec: TrainSpec
) -> tuple[ModelParams, TrainStats]:
    """Run ``spec.epochs`` passes of mini-batch SGD from ``start``.

    Batch order is a fresh shuffle each epoch, seeded from
    ``(spec.seed, epoch_index)`` so trajectories are reproducible for any epoch
    budget. The proximal anchor, when enabled, is the incoming global model.
    ``start`` is never mutated.
    """
    if data.n_samples == 0:
        raise ValueError("empty dataset")
    values = start.values.copy()
    anchor = start if spec.prox_mu > 0 else None
    n = data.n_samples
    for epoch in range(spec.epochs):
        order = np.random.default_rng(
            np.random.SeedSequence((spec.seed, epoch))
        ).permutation(n)
        for lo in range(0, n, spec.batch_size):
            idx = order[lo : lo + spec.batch_size]
            batch = LocalDataset(
                features=data.features[idx],
                labels=data.labels[idx],
                client_id=data.client_id,
            )
            current = ModelParams(values=values, shape_tag=start.shape_tag)
            _, grad = loss_and_grad(current, batch, anchor, spec.prox_mu)
            values = values - spec.learning_rate * grad
    trained = ModelParams(values=values, shape_tag=start.shape_tag)
    final_loss, _ = loss_and_grad(trained, data, anchor, spec.prox_mu)
    return trained, TrainStats(final_loss=final_loss, n_samples=n)


def evaluate(params: ModelParams, data: LocalDataset) -> EvalMetrics:
    """Accuracy, macro-F1, and balanced accuracy of argmax predictions.

    Macro-F1 averages over all model classes; a class absent from both the
    labels and the predictions contributes an F1 of 0. Balanced accuracy is
    the mean recall over the classes that actually appear in the labels.
    """
    if data.n_samples == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    n_classes = params.shape_tag[2]
    logits, _ = _forward_logits(params.values, data.features, params.shape_tag)
    preds = logits.argmax(axis=1)
    labels = data.labels

    accuracy = float(np.mean(preds == labels))
    f1s = []
    recalls = []
    for cls in range(n_classes):
        tp = int(np.sum((preds == cls) & (labels == cls)))
        fp = int(np.sum((preds == cls) & (labels != cls)))
        fn = int(np.sum((preds != cls) & (labels == cls)))
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
        if tp + fn:
            recalls.append(tp / (tp + fn))
    return EvalMetrics(
        accuracy=accuracy,
        macro_f1=float(np.mean(f1s)),
        balanced_accuracy=float(np.mean(recalls)),
    )
