"""Gradient verification against central finite differences.

Meant for tiny double-precision models: every parameter element is probed
with a central difference of the loss, and the worst relative error
against the analytic gradient is returned. Inputs are resampled until the
forward pass stays clear of ReLU kinks and max-pool ties, where finite
differences are invalid.
"""

from __future__ import annotations

import numpy as np

from .losses import bce_loss, cross_entropy_loss
from .model import CnnModel

MAX_PARAMS = 5_000
SMOOTHNESS_TOL = 1e-3


def gradient_check(
    model: CnnModel,
    batch_size: int = 1,
    loss: str = "bce",
    step: float = 1e-4,
    seed: int = 0,
    max_resample: int = 50,
    corrupt_param: str | None = None,
    corrupt_factor: float = 2.0,
) -> float:
    """Return the max relative error between analytic and numeric gradients.

    ``corrupt_param`` deliberately scales one analytic gradient tensor by
    ``corrupt_factor`` before the comparison; it exists to verify that the
    check itself is sensitive to wrong gradients.

    Relative error per element: ``|a - n| / max(|a|, |n|, 1e-8)``.
    """
    if model.dtype != np.float64:
        raise ValueError("gradient_check requires a float64 model")
    if model.n_parameters() > MAX_PARAMS:
        raise ValueError(f"model too large for exhaustive checking (> {MAX_PARAMS} params)")
    if loss not in ("bce", "ce"):
        raise ValueError("loss must be 'bce' or 'ce'")

    rng = np.random.default_rng(seed)
    h, w = model.config.input_hw
    n_classes = model.config.n_classes
    if loss == "bce":
        targets = (rng.uniform(size=(batch_size, n_classes)) < 0.5).astype(np.float64)

        def loss_fn(probs):
            return bce_loss(probs, targets)

    else:
        targets = rng.integers(0, n_classes, size=batch_size)

        def loss_fn(probs):
            return cross_entropy_loss(probs, targets)

    for _, layer in model.layers:
        layer.probe_smoothness = True
    try:
        x = None
        for _ in range(max_resample):
            candidate = rng.standard_normal((batch_size, h, w, 1))
            model.forward(candidate, train=True)
            if model.smoothness_margin() > SMOOTHNESS_TOL:
                x = candidate
                break
        if x is None:
            raise RuntimeError("could not find a smooth evaluation point; non-smooth point detected")
    finally:
        for _, layer in model.layers:
            layer.probe_smoothness = False

    probs = model.forward(x, train=True)
    _, dprobs = loss_fn(probs)
    model.backward(dprobs)
    analytic = {name: g.copy() for name, g in model.gradients().items()}
    if corrupt_param is not None:
        if corrupt_param not in analytic:
            raise KeyError(f"unknown parameter {corrupt_param!r}")
        analytic[corrupt_param] = analytic[corrupt_param] * corrupt_factor

    worst = 0.0
    for name, p in model.parameters():
        a = analytic[name]
        for idx in range(p.size):
            orig = p.flat[idx]
            p.flat[idx] = orig + step
            lo_plus = loss_fn(model.forward(x, train=True))[0]
            p.flat[idx] = orig - step
            lo_minus = loss_fn(model.forward(x, train=True))[0]
            p.flat[idx] = orig
            numeric = (lo_plus - lo_minus) / (2.0 * step)
            rel = abs(a.flat[idx] - numeric) / max(abs(a.flat[idx]), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst
