"""CNN model assembly: conv/ReLU/BN/pool blocks, FC head, sigmoid or softmax."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import BatchNorm, Conv2D, Dense, Flatten, Layer, MaxPool2D, ReLU


@dataclass(frozen=True)
class ModelConfig:
    """Architecture descriptor.

    The default stack: three conv blocks (16/32/64 filters of ``kernel`` x
    ``kernel``, stride 1, same padding; ReLU; batch norm; 2x2 max pool),
    flatten, one 128-unit hidden FC layer with ReLU, and a linear layer to
    ``n_classes`` logits. ``head="sigmoid"`` treats each class as an
    independent binary decision (multi-label); ``head="softmax"`` is the
    single-label variant.
    """

    input_hw: tuple[int, int] = (40, 106)
    conv_channels: tuple[int, ...] = (16, 32, 64)
    kernel: int = 3
    fc_units: tuple[int, ...] = (128,)
    n_classes: int = 7
    head: str = "sigmoid"
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    def __post_init__(self) -> None:
        if self.head not in ("sigmoid", "softmax"):
            raise ValueError("head must be 'sigmoid' or 'softmax'")
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        h, w = self.input_hw
        for _ in self.conv_channels:
            h, w = h // 2, w // 2
        if h < 1 or w < 1:
            raise ValueError("too many pooling stages for the input size")
        object.__setattr__(self, "input_hw", tuple(self.input_hw))
        object.__setattr__(self, "conv_channels", tuple(self.conv_channels))
        object.__setattr__(self, "fc_units", tuple(self.fc_units))

    @property
    def flattened_features(self) -> int:
        h, w = self.input_hw
        c = 1
        for ch in self.conv_channels:
            h, w, c = h // 2, w // 2, ch
        return h * w * c


class CnnModel:
    """A sequential CNN with explicit forward/backward passes.

    The model is either in training or inference mode (``self.training``);
    batch norm switches between batch and running statistics accordingly,
    and ``backward`` requires a preceding training-mode ``forward``.
    """

    def __init__(self, config: ModelConfig, seed: int = 0, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.training = False
        rng = np.random.default_rng(seed)
        layers: list[tuple[str, Layer]] = []
        in_ch = 1
        for i, ch in enumerate(config.conv_channels):
            layers.append((f"conv{i}", Conv2D(in_ch, ch, config.kernel, rng, dtype)))
            layers.append((f"relu{i}", ReLU()))
            layers.append((f"bn{i}", BatchNorm(ch, config.bn_eps, config.bn_momentum, dtype)))
            layers.append((f"pool{i}", MaxPool2D()))
            in_ch = ch
        layers.append(("flatten", Flatten()))
        features = config.flattened_features
        for i, units in enumerate(config.fc_units):
            layers.append((f"fc{i}", Dense(features, units, rng, dtype)))
            layers.append((f"fc{i}_relu", ReLU()))
            features = units
        layers.append((f"fc{len(config.fc_units)}", Dense(features, config.n_classes, rng, dtype)))
        self.layers = layers
        self._head_probs: np.ndarray | None = None

    # -- forward / backward ------------------------------------------------

    def forward(self, x: np.ndarray, train: bool | None = None) -> np.ndarray:
        """Map a batch of images to class probabilities.

        Accepts (B, H, W, 1) or (B, H, W) input, returns (B, n_classes).
        """
        if train is None:
            train = self.training
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 3:
            x = x[..., None]
        h, w = self.config.input_hw
        if x.ndim != 4 or x.shape[1:] != (h, w, 1):
            raise ValueError(f"expected input batch of shape (B, {h}, {w}, 1), got {x.shape}")
        for _, layer in self.layers:
            x = layer.forward(x, train)
        probs = self._apply_head(x)
        self._head_probs = probs if train else None
        return probs

    def _apply_head(self, logits: np.ndarray) -> np.ndarray:
        if self.config.head == "sigmoid":
            out = np.empty_like(logits)
            pos = logits >= 0
            out[pos] = 1.0 / (1.0 + np.exp(-logits[pos]))
            ez = np.exp(logits[~pos])
            out[~pos] = ez / (1.0 + ez)
            return out
        z = logits - logits.max(axis=1, keepdims=True)
        ez = np.exp(z)
        return ez / ez.sum(axis=1, keepdims=True)

    def backward(self, dprobs: np.ndarray) -> None:
        """Backpropagate a gradient w.r.t. the head probabilities."""
        if self._head_probs is None:
            raise RuntimeError("backward requires a preceding training-mode forward")
        y = self._head_probs
        if self.config.head == "sigmoid":
            dy = (dprobs * y * (1.0 - y)).astype(self.dtype)
        else:
            inner = (dprobs * y).sum(axis=1, keepdims=True)
            dy = (y * (dprobs - inner)).astype(self.dtype)
        for _, layer in reversed(self.layers):
            dy = layer.backward(dy)
        self._head_probs = None

    def smoothness_margin(self) -> float:
        """Distance to the nearest ReLU kink / pool tie in the last train pass."""
        return min(layer.smoothness_margin() for _, layer in self.layers)

    # -- parameter access ----------------------------------------------------

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for name, layer in self.layers:
            for pname, p in layer.params.items():
                out.append((f"{name}.{pname}", p))
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self.layers:
            for pname, g in layer.grads.items():
                out[f"{name}.{pname}"] = g
        return out

    def n_parameters(self) -> int:
        return sum(p.size for _, p in self.parameters())

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: p.copy() for name, p in self.parameters()}
        for name, layer in self.layers:
            if isinstance(layer, BatchNorm):
                state[f"{name}.running_mean"] = layer.running_mean.copy()
                state[f"{name}.running_var"] = layer.running_var.copy()
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for name, layer in self.layers:
            for pname in layer.params:
                key = f"{name}.{pname}"
                src = state[key]
                if layer.params[pname].shape != src.shape:
                    raise ValueError(f"shape mismatch for {key}")
                layer.params[pname][...] = src
            if isinstance(layer, BatchNorm):
                layer.running_mean[...] = state[f"{name}.running_mean"]
                layer.running_var[...] = state[f"{name}.running_var"]


def predict_multilabel(probs: np.ndarray, threshold: float = 0.6) -> np.ndarray:
    """Binary label matrix: 1 where probability strictly exceeds the threshold."""
    probs = np.asarray(probs)
    if probs.min() < 0.0 or probs.max() > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    return (probs > threshold).astype(np.int8)
