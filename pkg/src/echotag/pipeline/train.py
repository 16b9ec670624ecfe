"""Minibatch training with early stopping on validation loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericError
from ..nn import Adam, CnnModel, ModelConfig, bce_loss, cross_entropy_loss, predict_multilabel
from .metrics import multilabel_metrics, single_label_accuracy


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 100
    patience: int = 20
    batch_size: int = 32
    threshold: float = 0.6
    seed: int = 0
    class_weighting: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must be in (0, 1)")
        if self.patience > self.max_epochs:
            raise ConfigError("patience cannot exceed max_epochs")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be >= 1")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_metric: float  # micro-F1 (multi-label) or accuracy (single-label)


def compute_class_weights(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Inverse-frequency weights ``N_total / (n_classes * N_c)``.

    ``N_c`` counts positive labels of class c (multi-label matrices) or
    samples of class c (index vectors). Classes absent from the data get
    weight 0; when every class occurs, ``sum_c w_c N_c == N_total``.
    """
    labels = np.asarray(labels)
    if labels.ndim == 2:
        counts = labels.sum(axis=0).astype(float)
    else:
        counts = np.bincount(labels.astype(int), minlength=n_classes).astype(float)
    total = counts.sum()
    weights = np.zeros(n_classes)
    present = counts > 0
    weights[present] = total / (n_classes * counts[present])
    return weights


def train_model(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    model_config: ModelConfig,
    config: TrainConfig,
    dtype=np.float32,
    log=None,
) -> tuple[CnnModel, list[EpochRecord]]:
    """Train a model, early-stop on validation loss, restore the best epoch.

    Training stops after ``patience`` consecutive epochs without a new best
    validation loss (patience 0 stops at the first non-improving epoch).
    Raises :class:`NumericError` if the loss turns non-finite.
    """
    multilabel = model_config.head == "sigmoid"
    model = CnnModel(model_config, seed=config.seed, dtype=dtype)
    optimizer = Adam(model, lr=config.learning_rate)
    weights = None
    if config.class_weighting:
        weights = compute_class_weights(y_train, model_config.n_classes)

    def loss_fn(probs, targets):
        if multilabel:
            return bce_loss(probs, targets, weights)
        return cross_entropy_loss(probs, targets, weights)

    rng = np.random.default_rng(config.seed + 1)
    n = x_train.shape[0]
    history: list[EpochRecord] = []
    best_loss = math.inf
    best_state = model.state_dict()
    since_best = 0

    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            probs = model.forward(x_train[idx], train=True)
            loss, dprobs = loss_fn(probs, y_train[idx])
            if not math.isfinite(loss):
                raise NumericError(f"training diverged: non-finite loss at epoch {epoch}")
            model.backward(dprobs)
            optimizer.step()
            total += loss * len(idx)
        train_loss = total / n

        val_probs = _batched_forward(model, x_val)
        val_loss, _ = loss_fn(val_probs, y_val)
        if not math.isfinite(val_loss):
            raise NumericError(f"training diverged: non-finite validation loss at epoch {epoch}")
        if multilabel:
            val_metric = multilabel_metrics(predict_multilabel(val_probs, config.threshold), y_val).micro_f1
        else:
            val_metric = single_label_accuracy(val_probs.argmax(axis=1), y_val)
        history.append(EpochRecord(epoch, train_loss, val_loss, val_metric))
        if log:
            log(f"epoch {epoch:3d}  train {train_loss:.4f}  val {val_loss:.4f}  metric {val_metric:.4f}")

        if val_loss < best_loss:
            best_loss = val_loss
            best_state = model.state_dict()
            since_best = 0
        else:
            since_best += 1
            if since_best > config.patience:
                break

    model.load_state_dict(best_state)
    model.training = False
    return model, history


def _batched_forward(model: CnnModel, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
    outputs = [model.forward(x[i : i + batch_size], train=False) for i in range(0, x.shape[0], batch_size)]
    return np.concatenate(outputs, axis=0)


def evaluate_multilabel(model: CnnModel, x: np.ndarray, y: np.ndarray, threshold: float = 0.6):
    """Threshold the model's probabilities and score them against ``y``."""
    probs = _batched_forward(model, x)
    return multilabel_metrics(predict_multilabel(probs, threshold), y)
