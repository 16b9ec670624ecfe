"""Gammatone filterbank and cochleogram images.

The front end mimics the cochlear time-frequency analysis: a bank of
4th-order gammatone filters with center frequencies equally spaced on the
ERB-rate scale, followed by half-wave rectification, envelope smoothing,
time pooling, log compression and per-image min-max normalization. The
default output is the 40x106 image consumed by the CNN.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len
from scipy.signal import lfilter

DEFAULT_N_FRAMES = 106
DEFAULT_KAPPA = 1e3  # log-compression constant
DEFAULT_SMOOTHING_TAU = 1e-3  # s, envelope low-pass time constant


@dataclass(frozen=True)
class FilterbankSpec:
    """Gammatone filterbank parameters."""

    sample_rate: float
    n_channels: int = 40
    f_min: float = 25_000.0
    f_max: float = 80_000.0
    order: int = 4

    def __post_init__(self) -> None:
        if self.n_channels < 2:
            raise ValueError("n_channels must be >= 2")
        if not 0 < self.f_min < self.f_max < self.sample_rate / 2:
            raise ValueError("need 0 < f_min < f_max < sample_rate/2")
        if self.order < 1:
            raise ValueError("order must be >= 1")


@dataclass(frozen=True, eq=False)
class Cochleogram:
    """Normalized time-frequency image, channels (rows) by frames (columns)."""

    values: np.ndarray  # (n_channels, n_frames) in [0, 1]
    center_frequencies: np.ndarray  # (n_channels,) Hz, ascending
    frame_duration: float  # s per column

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise ValueError("values must be 2-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ValueError("values must lie in [0, 1]")


def erb_bandwidth(freq: float | np.ndarray) -> float | np.ndarray:
    """Equivalent rectangular bandwidth at ``freq`` (Glasberg & Moore)."""
    return 24.7 * (4.37 * np.asarray(freq) / 1000.0 + 1.0)


def erb_rate(freq: float | np.ndarray) -> float | np.ndarray:
    """Map frequency (Hz) to the ERB-rate scale."""
    return 21.4 * np.log10(4.37 * np.asarray(freq) / 1000.0 + 1.0)


def erb_rate_inverse(rate: float | np.ndarray) -> float | np.ndarray:
    return (np.power(10.0, np.asarray(rate) / 21.4) - 1.0) * 1000.0 / 4.37


def erb_center_frequencies(n: int, f_min: float, f_max: float) -> np.ndarray:
    """``n`` frequencies equally spaced on the ERB-rate scale, endpoints exact."""
    if n < 2:
        raise ValueError("need at least 2 channels")
    if not 0 < f_min < f_max:
        raise ValueError("need 0 < f_min < f_max")
    cf = erb_rate_inverse(np.linspace(erb_rate(f_min), erb_rate(f_max), n))
    cf[0], cf[-1] = f_min, f_max
    return cf


@functools.lru_cache(maxsize=8)
def _impulse_responses(spec: FilterbankSpec) -> tuple[np.ndarray, np.ndarray]:
    """Unit-center-gain gammatone impulse responses, one row per channel."""
    fs = spec.sample_rate
    cf = erb_center_frequencies(spec.n_channels, spec.f_min, spec.f_max)
    bw = 1.019 * np.asarray(erb_bandwidth(cf))
    # The t^(order-1) exp(-2 pi b t) envelope is negligible past ~30/(2 pi b);
    # truncate there, sized by the narrowest (lowest) channel.
    length = int(math.ceil(fs * 30.0 / (2.0 * math.pi * bw.min())))
    t = np.arange(length) / fs
    env = t ** (spec.order - 1) * np.exp(-2.0 * np.pi * bw[:, None] * t)
    irs = env * np.cos(2.0 * np.pi * cf[:, None] * t)
    gain = np.abs(np.sum(irs * np.exp(-2j * np.pi * cf[:, None] * t), axis=1))
    return irs / gain[:, None], cf


def gammatone_filterbank(samples: np.ndarray, spec: FilterbankSpec) -> np.ndarray:
    """Run the filterbank causally over a signal, shape (n_channels, n_samples).

    Filtering is FFT convolution with truncated gammatone impulse responses,
    normalized to unit gain at each channel's center frequency.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValueError("samples must be 1-D")
    irs, _ = _impulse_responses(spec)
    n = x.size
    nfft = next_fast_len(n + irs.shape[1] - 1)
    spec_x = np.fft.rfft(x, nfft)
    out = np.fft.irfft(np.fft.rfft(irs, nfft, axis=1) * spec_x, nfft, axis=1)
    return out[:, :n]


def to_cochleogram(
    sig,
    spec: FilterbankSpec,
    n_frames: int = DEFAULT_N_FRAMES,
    kappa: float = DEFAULT_KAPPA,
    smoothing_tau: float = DEFAULT_SMOOTHING_TAU,
) -> Cochleogram:
    """Convert a signal into a normalized cochleogram image.

    Chain: gammatone filterbank -> half-wave rectification -> first-order
    low-pass envelope (time constant ``smoothing_tau``) -> non-overlapping
    mean pooling into ``n_frames`` columns -> ``log(1 + kappa * x)`` with the
    pooled envelope rescaled to unit peak (so the compression operates on
    relative level, independent of absolute echo strength) -> min-max
    normalization over the whole image. An all-zero signal maps to an
    all-zero image.
    """
    if sig.sample_rate != spec.sample_rate:
        raise ValueError("signal sample rate does not match the filterbank spec")
    x = sig.samples
    n = x.size
    if n < n_frames:
        raise ValueError(f"signal of {n} samples cannot fill {n_frames} frames")

    bands = gammatone_filterbank(x, spec)
    rectified = np.maximum(bands, 0.0)
    alpha = math.exp(-1.0 / (spec.sample_rate * smoothing_tau))
    envelope = lfilter([1.0 - alpha], [1.0, -alpha], rectified, axis=1)

    edges = np.round(np.linspace(0, n, n_frames + 1)).astype(int)
    pooled = np.add.reduceat(envelope, edges[:-1], axis=1) / np.diff(edges)

    peak = pooled.max()
    if peak > 0.0:
        pooled = pooled / peak
    compressed = np.log1p(kappa * np.maximum(pooled, 0.0))
    lo, hi = compressed.min(), compressed.max()
    if hi - lo <= 0.0:
        values = np.zeros_like(compressed)
    else:
        values = (compressed - lo) / (hi - lo)

    _, cf = _impulse_responses(spec)
    return Cochleogram(
        values=values,
        center_frequencies=cf,
        frame_duration=n / spec.sample_rate / n_frames,
    )


def write_pgm(values: np.ndarray, path) -> None:
    """Export an image in [0, 1] as binary 8-bit PGM (for quick inspection)."""
    img = np.clip(np.asarray(values), 0.0, 1.0)
    data = np.round(img * 255.0).astype(np.uint8)
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + data.tobytes())
