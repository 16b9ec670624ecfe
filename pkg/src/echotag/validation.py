"""Input validation helpers for the estimator API."""

from __future__ import annotations

import numpy as np


def check_signal_batch(X) -> np.ndarray:
    """Coerce to a finite (n_samples, n_points) float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"expected a batch of 1-D signals, got array of shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("signals must be finite")
    return X


def check_image_batch(X, image_shape: tuple[int, int]) -> np.ndarray:
    """Coerce to (n_samples, height, width); flat rows are reshaped."""
    h, w = image_shape
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] == h * w:
        X = X.reshape(-1, h, w)
    if X.ndim == 4 and X.shape[1:] == (h, w, 1):
        X = X[..., 0]
    if X.ndim != 3 or X.shape[1:] != (h, w):
        raise ValueError(f"expected images of shape {image_shape} (or flat {h * w}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("images must be finite")
    return X


def check_multilabel_targets(y, n_classes: int | None = None) -> np.ndarray:
    """Validate a binary indicator matrix, returns int8 (n_samples, n_classes)."""
    y = np.asarray(y)
    if y.ndim != 2:
        raise ValueError("multi-label targets must be a 2-D indicator matrix")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("multi-label targets must contain only 0 and 1")
    if n_classes is not None and y.shape[1] != n_classes:
        raise ValueError(f"expected {n_classes} label columns, got {y.shape[1]}")
    return y.astype(np.int8)


def check_single_label_targets(y, n_classes: int | None = None) -> np.ndarray:
    """Validate integer class indices, returns int64 (n_samples,)."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("single-label targets must be a 1-D class-index vector")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == np.round(y)):
            raise ValueError("single-label targets must be integers")
        y = y.astype(int)
    if y.min() < 0:
        raise ValueError("class indices must be >= 0")
    if n_classes is not None and y.max() >= n_classes:
        raise ValueError(f"class index {y.max()} out of range for {n_classes} classes")
    return y.astype(np.int64)
