"""Layers for the minimal CNN engine (NHWC layout, numpy only).

Every layer implements ``forward(x, train)`` and ``backward(dy)``;
parameters and their gradients live in the ``params`` / ``grads`` dicts.
After a training-mode forward pass, ``smoothness_margin`` reports how far
the pass stayed from the layer's non-differentiable points (ReLU kinks,
max-pool ties); the gradient checker uses it to reject unlucky inputs.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    probe_smoothness = False  # set by the gradient checker; adds per-pass cost

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def smoothness_margin(self) -> float:
        return math.inf


def he_uniform(shape: tuple[int, ...], fan_in: int, rng: np.random.Generator, dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Conv2D(Layer):
    """3x3-style convolution, stride 1, same padding, via im2col + GEMM."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        if kernel % 2 != 1:
            raise ValueError("kernel size must be odd for same padding")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        fan_in = kernel * kernel * in_channels
        self.params["W"] = he_uniform((kernel, kernel, in_channels, out_channels), fan_in, rng, dtype)
        self.params["b"] = np.zeros(out_channels, dtype=dtype)
        self._cols: np.ndarray | None = None
        self._xshape: tuple[int, ...] | None = None

    def forward(self, x, train):
        b, h, w, c = x.shape
        if c != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {c}")
        k, pad = self.kernel, self.kernel // 2
        xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
        win = sliding_window_view(xp, (k, k), axis=(1, 2))  # (b, h, w, c, k, k)
        cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(b * h * w, k * k * c)
        y = cols @ self.params["W"].reshape(k * k * c, self.out_channels) + self.params["b"]
        if train:
            self._cols = cols
            self._xshape = x.shape
        return y.reshape(b, h, w, self.out_channels)

    def backward(self, dy):
        if self._cols is None:
            raise RuntimeError("backward called before a training-mode forward")
        b, h, w, _ = self._xshape
        k, c, pad = self.kernel, self.in_channels, self.kernel // 2
        dy_mat = dy.reshape(b * h * w, self.out_channels)
        self.grads["W"] = (self._cols.T @ dy_mat).reshape(self.params["W"].shape)
        self.grads["b"] = dy_mat.sum(axis=0)
        dcols = (dy_mat @ self.params["W"].reshape(k * k * c, self.out_channels).T).reshape(
            b, h, w, k, k, c
        )
        dxp = np.zeros((b, h + 2 * pad, w + 2 * pad, c), dtype=dy.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, i : i + h, j : j + w, :] += dcols[:, :, :, i, j, :]
        self._cols = None
        return dxp[:, pad : pad + h, pad : pad + w, :]


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self._mask: np.ndarray | None = None
        self._margin = math.inf

    def forward(self, x, train):
        if train:
            self._mask = x > 0
            if self.probe_smoothness:
                self._margin = float(np.abs(x).min()) if x.size else math.inf
            return x * self._mask
        return np.maximum(x, 0.0)

    def backward(self, dy):
        if self._mask is None:
            raise RuntimeError("backward called before a training-mode forward")
        dx = dy * self._mask
        self._mask = None
        return dx

    def smoothness_margin(self):
        return self._margin


class BatchNorm(Layer):
    """Per-channel batch normalization over the (batch, height, width) axes."""

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1, dtype=np.float32):
        super().__init__()
        self.eps = eps
        self.momentum = momentum
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def forward(self, x, train):
        axes = tuple(range(x.ndim - 1))
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            ivar = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean) * ivar
            m = self.momentum
            self.running_mean = ((1 - m) * self.running_mean + m * mean).astype(x.dtype)
            self.running_var = ((1 - m) * self.running_var + m * var).astype(x.dtype)
            self._cache = (xhat, ivar, x.shape)
            return self.params["gamma"] * xhat + self.params["beta"]
        ivar = 1.0 / np.sqrt(self.running_var + self.eps)
        return self.params["gamma"] * (x - self.running_mean) * ivar + self.params["beta"]

    def backward(self, dy):
        if self._cache is None:
            raise RuntimeError("backward called before a training-mode forward")
        xhat, ivar, shape = self._cache
        axes = tuple(range(dy.ndim - 1))
        n = dy.size // dy.shape[-1]
        dgamma = (dy * xhat).sum(axis=axes)
        dbeta = dy.sum(axis=axes)
        self.grads["gamma"] = dgamma
        self.grads["beta"] = dbeta
        # dxhat = dy * gamma, so sum(dxhat) = gamma * dbeta and
        # sum(dxhat * xhat) = gamma * dgamma; fusing avoids two more
        # full-size temporaries.
        scale = self.params["gamma"] * ivar / n
        dx = scale * (n * dy - dbeta - xhat * dgamma)
        self._cache = None
        return dx


class MaxPool2D(Layer):
    """2x2 max pooling, stride 2; odd trailing rows/columns are dropped.

    The four window entries are compared pairwise instead of materializing
    a (.., 4) window tensor; ties resolve to the first entry in row-major
    window order, matching argmax semantics.
    """

    def __init__(self):
        super().__init__()
        self._cache = None
        self._margin = math.inf

    def forward(self, x, train):
        b, h, w, c = x.shape
        h2, w2 = h // 2, w // 2
        q00 = x[:, : 2 * h2 : 2, : 2 * w2 : 2, :]
        q01 = x[:, : 2 * h2 : 2, 1 : 2 * w2 : 2, :]
        q10 = x[:, 1 : 2 * h2 : 2, : 2 * w2 : 2, :]
        q11 = x[:, 1 : 2 * h2 : 2, 1 : 2 * w2 : 2, :]
        top = np.maximum(q00, q01)
        bottom = np.maximum(q10, q11)
        out = np.maximum(top, bottom)
        if train:
            from_bottom = bottom > top
            right = np.where(from_bottom, q11 > q10, q01 > q00)
            idx = 2 * from_bottom + right  # window index in {00, 01, 10, 11}
            if self.probe_smoothness:
                # Exact ties come from entries that are the same function of
                # the parameters (e.g. several ReLU zeros mapped through batch
                # norm); they co-move under perturbations, so only near-ties
                # between distinct values threaten differentiability.
                second = np.where(
                    from_bottom,
                    np.maximum(top, np.minimum(q10, q11)),
                    np.maximum(bottom, np.minimum(q00, q01)),
                )
                gaps = out - second
                near = gaps[gaps > 0.0]
                self._margin = float(near.min()) if near.size else math.inf
            self._cache = (idx, x.shape)
        return out

    def backward(self, dy):
        if self._cache is None:
            raise RuntimeError("backward called before a training-mode forward")
        idx, (b, h, w, c) = self._cache
        h2, w2 = h // 2, w // 2
        dx = np.zeros((b, h, w, c), dtype=dy.dtype)
        zero = np.zeros((), dtype=dy.dtype)
        dx[:, : 2 * h2 : 2, : 2 * w2 : 2, :] = np.where(idx == 0, dy, zero)
        dx[:, : 2 * h2 : 2, 1 : 2 * w2 : 2, :] = np.where(idx == 1, dy, zero)
        dx[:, 1 : 2 * h2 : 2, : 2 * w2 : 2, :] = np.where(idx == 2, dy, zero)
        dx[:, 1 : 2 * h2 : 2, 1 : 2 * w2 : 2, :] = np.where(idx == 3, dy, zero)
        self._cache = None
        return dx

    def smoothness_margin(self):
        return self._margin


class Flatten(Layer):
    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x, train):
        if train:
            self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        if self._shape is None:
            raise RuntimeError("backward called before a training-mode forward")
        dx = dy.reshape(self._shape)
        self._shape = None
        return dx


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.params["W"] = he_uniform((in_features, out_features), in_features, rng, dtype)
        self.params["b"] = np.zeros(out_features, dtype=dtype)
        self._x = None

    def forward(self, x, train):
        if train:
            self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dy):
        if self._x is None:
            raise RuntimeError("backward called before a training-mode forward")
        self.grads["W"] = self._x.T @ dy
        self.grads["b"] = dy.sum(axis=0)
        dx = dy @ self.params["W"].T
        self._x = None
        return dx
