"""Scikit-learn style estimators wrapping the front end and the CNN.

These wrappers make the decode chain compose with the wider ecosystem
(``sklearn.pipeline.Pipeline``, grid search, cross-validation): the
cochleogram front end is a stateless transformer and the CNN classifier
follows the fit/predict/predict_proba contract with ``get_params`` /
``set_params`` support inherited from ``BaseEstimator``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .cochlea import FilterbankSpec, to_cochleogram
from .nn import CnnModel, ModelConfig, predict_multilabel
from .pipeline.train import TrainConfig, train_model
from .validation import (
    check_image_batch,
    check_multilabel_targets,
    check_signal_batch,
    check_single_label_targets,
)
from .waveform import Signal, WaveformSpec, fm_sweep, matched_filter


class CochleogramFrontEnd(BaseEstimator, TransformerMixin):
    """Transform batches of echo signals into cochleogram images.

    Parameters
    ----------
    sample_rate : float
        Sample rate of the input signals, Hz.
    n_channels, f_min, f_max : filterbank layout (rows of the image).
    n_frames : int
        Time-axis resolution (columns of the image).
    pulse_compress : bool
        Matched-filter each signal with the emitted sweep first.
    f_start, f_end, sweep_duration : parameters of that sweep.
    flatten : bool
        Return (n_samples, n_channels * n_frames) instead of image batches,
        for downstream estimators that require 2-D input.
    """

    def __init__(
        self,
        sample_rate: float = 450_000.0,
        n_channels: int = 40,
        f_min: float = 25_000.0,
        f_max: float = 80_000.0,
        n_frames: int = 106,
        kappa: float = 1e3,
        smoothing_tau: float = 1e-3,
        pulse_compress: bool = True,
        f_start: float = 25_000.0,
        f_end: float = 80_000.0,
        sweep_duration: float = 2.5e-3,
        flatten: bool = False,
    ):
        self.sample_rate = sample_rate
        self.n_channels = n_channels
        self.f_min = f_min
        self.f_max = f_max
        self.n_frames = n_frames
        self.kappa = kappa
        self.smoothing_tau = smoothing_tau
        self.pulse_compress = pulse_compress
        self.f_start = f_start
        self.f_end = f_end
        self.sweep_duration = sweep_duration
        self.flatten = flatten

    def fit(self, X, y=None):
        X = check_signal_batch(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        X = check_signal_batch(X)
        spec = FilterbankSpec(
            sample_rate=self.sample_rate,
            n_channels=self.n_channels,
            f_min=self.f_min,
            f_max=self.f_max,
        )
        template = None
        if self.pulse_compress:
            template = fm_sweep(
                WaveformSpec(self.f_start, self.f_end, self.sweep_duration, self.sample_rate)
            )
        images = []
        for row in X:
            sig = Signal(row, self.sample_rate)
            if template is not None:
                sig = matched_filter(sig, template)
            images.append(to_cochleogram(sig, spec, self.n_frames, self.kappa, self.smoothing_tau).values)
        out = np.stack(images)
        return out.reshape(out.shape[0], -1) if self.flatten else out


class CnnClassifier(BaseEstimator, ClassifierMixin):
    """Multi-label or single-label CNN classifier on cochleogram images.

    ``head="multilabel"`` trains a sigmoid head on binary indicator targets
    and predicts with a strict ``probability > threshold`` rule;
    ``head="single"`` trains a softmax head on class indices. A validation
    slice is split off the training data for early stopping.
    """

    def __init__(
        self,
        head: str = "multilabel",
        image_shape: tuple[int, int] = (40, 106),
        conv_channels: tuple[int, ...] = (16, 32, 64),
        kernel: int = 3,
        fc_units: tuple[int, ...] = (128,),
        learning_rate: float = 1e-3,
        max_epochs: int = 100,
        patience: int = 20,
        batch_size: int = 32,
        threshold: float = 0.6,
        val_fraction: float = 0.2,
        class_weighting: bool = True,
        seed: int = 0,
    ):
        self.head = head
        self.image_shape = image_shape
        self.conv_channels = conv_channels
        self.kernel = kernel
        self.fc_units = fc_units
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.patience = patience
        self.batch_size = batch_size
        self.threshold = threshold
        self.val_fraction = val_fraction
        self.class_weighting = class_weighting
        self.seed = seed

    def fit(self, X, y):
        if self.head not in ("multilabel", "single"):
            raise ValueError("head must be 'multilabel' or 'single'")
        X = check_image_batch(X, self.image_shape)
        if self.head == "multilabel":
            y = check_multilabel_targets(y)
            n_classes = y.shape[1]
            self.classes_ = np.arange(n_classes)
        else:
            y = check_single_label_targets(y)
            self.classes_ = np.unique(y)
            n_classes = int(y.max()) + 1
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y disagree on the number of samples")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must be in (0, 1)")

        n_val = max(1, int(round(self.val_fraction * X.shape[0])))
        if n_val >= X.shape[0]:
            raise ValueError("not enough samples to split off a validation set")
        perm = np.random.default_rng(self.seed).permutation(X.shape[0])
        val_idx, train_idx = perm[:n_val], perm[n_val:]

        model_config = ModelConfig(
            input_hw=tuple(self.image_shape),
            conv_channels=tuple(self.conv_channels),
            kernel=self.kernel,
            fc_units=tuple(self.fc_units),
            n_classes=n_classes,
            head="sigmoid" if self.head == "multilabel" else "softmax",
        )
        train_config = TrainConfig(
            learning_rate=self.learning_rate,
            max_epochs=self.max_epochs,
            patience=self.patience,
            batch_size=self.batch_size,
            threshold=self.threshold,
            seed=self.seed,
            class_weighting=self.class_weighting,
        )
        self.model_, self.history_ = train_model(
            X[train_idx], y[train_idx], X[val_idx], y[val_idx], model_config, train_config
        )
        self.n_features_in_ = X.shape[1] * X.shape[2]
        return self

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_image_batch(X, self.image_shape)
        return np.concatenate(
            [self.model_.forward(X[i : i + 256], train=False) for i in range(0, X.shape[0], 256)]
        )

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        if self.head == "multilabel":
            return predict_multilabel(probs, self.threshold)
        return probs.argmax(axis=1)

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError("this CnnClassifier instance is not fitted yet")
