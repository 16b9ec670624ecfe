"""Losses over head probabilities, with analytic gradients.

Both losses clamp probabilities to [eps, 1-eps] before the log (the clamp
is treated as identity in the backward pass) and average over the batch
and, for BCE, over classes. Optional per-class weights multiply each
class's contribution.
"""

from __future__ import annotations

import numpy as np

CLAMP_EPS = 1e-7


def bce_loss(
    probs: np.ndarray,
    targets: np.ndarray,
    class_weights: np.ndarray | None = None,
    eps: float = CLAMP_EPS,
) -> tuple[float, np.ndarray]:
    """Weighted binary cross-entropy, per (sample, class), mean-aggregated.

    Returns ``(loss, dloss/dprobs)``. ``targets`` must be 0/1 and shaped
    like ``probs`` (batch, n_classes).
    """
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ValueError(f"shape mismatch: probs {probs.shape} vs targets {targets.shape}")
    w = np.ones(probs.shape[-1]) if class_weights is None else np.asarray(class_weights, dtype=np.float64)
    if w.shape != (probs.shape[-1],):
        raise ValueError("class_weights must have one entry per class")
    y = np.clip(probs, eps, 1.0 - eps)
    per_element = -(targets * np.log(y) + (1.0 - targets) * np.log1p(-y))
    loss = float(np.mean(w * per_element))
    grad = w * (-targets / y + (1.0 - targets) / (1.0 - y)) / probs.size
    return loss, grad


def cross_entropy_loss(
    probs: np.ndarray,
    class_indices: np.ndarray,
    class_weights: np.ndarray | None = None,
    eps: float = CLAMP_EPS,
) -> tuple[float, np.ndarray]:
    """Weighted categorical cross-entropy over softmax probabilities.

    ``class_indices`` holds one target class per sample. Returns
    ``(loss, dloss/dprobs)`` with the loss averaged over the batch.
    """
    probs = np.asarray(probs, dtype=np.float64)
    idx = np.asarray(class_indices)
    if idx.ndim != 1 or idx.shape[0] != probs.shape[0]:
        raise ValueError("class_indices must hold one class per sample")
    w = np.ones(probs.shape[-1]) if class_weights is None else np.asarray(class_weights, dtype=np.float64)
    y = np.clip(probs, eps, 1.0 - eps)
    rows = np.arange(probs.shape[0])
    picked = y[rows, idx]
    loss = float(np.mean(-w[idx] * np.log(picked)))
    grad = np.zeros_like(probs)
    grad[rows, idx] = -w[idx] / picked / probs.shape[0]
    return loss, grad
