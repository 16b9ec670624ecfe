"""ADAM optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """First/second moment estimates and the shared timestep."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p, dtype=np.float64) for p in params],
            v=[np.zeros_like(p, dtype=np.float64) for p in params],
            t=0,
        )


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> list[np.ndarray]:
    """One in-place ADAM update; returns the updated parameter list."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = np.asarray(g, dtype=np.float64)
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        p -= update.astype(p.dtype)
    return params


class Adam:
    """ADAM bound to a model's parameter/gradient tables."""

    def __init__(self, model, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.model = model
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._names = [name for name, _ in model.parameters()]
        self.state = AdamState.for_params([p for _, p in model.parameters()])

    def step(self) -> None:
        params = [p for _, p in self.model.parameters()]
        grad_table = self.model.gradients()
        missing = [n for n in self._names if n not in grad_table]
        if missing:
            raise RuntimeError(f"gradients missing for {missing}; run backward first")
        adam_step(params, [grad_table[n] for n in self._names], self.state, self.lr, self.beta1, self.beta2, self.eps)
