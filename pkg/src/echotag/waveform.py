"""FM-sweep generation and matched filtering (pulse compression)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.signal.windows import tukey


@dataclass(frozen=True)
class WaveformSpec:
    """Parameters of the emitted FM sweep.

    Defaults follow the sensor's broadband up-sweep: 2.5 ms from
    25 kHz to 80 kHz sampled at 450 kHz.
    """

    f_start: float = 25_000.0
    f_end: float = 80_000.0
    duration: float = 2.5e-3
    sample_rate: float = 450_000.0
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        nyquist = self.sample_rate / 2.0
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        if not (0 < self.f_start < nyquist and 0 < self.f_end < nyquist):
            raise ValueError("sweep frequencies must lie in (0, sample_rate/2)")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be > 0")


@dataclass(frozen=True, eq=False)
class Signal:
    """A real time-domain signal with its sample rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def fm_sweep(spec: WaveformSpec) -> Signal:
    """Generate a linear chirp from ``f_start`` to ``f_end``.

    The instantaneous frequency moves linearly over ``duration``; a
    Tukey taper (ratio 0.1) suppresses spectral splatter at the edges
    and the peak amplitude is normalized to ``spec.amplitude``.
    """
    n = int(round(spec.duration * spec.sample_rate))
    if n < 2:
        raise ValueError("duration * sample_rate must give at least 2 samples")
    t = np.arange(n) / spec.sample_rate
    rate = (spec.f_end - spec.f_start) / spec.duration
    phase = 2.0 * np.pi * (spec.f_start * t + 0.5 * rate * t * t)
    samples = np.sin(phase) * tukey(n, alpha=0.1)
    samples *= spec.amplitude / np.abs(samples).max()
    return Signal(samples, spec.sample_rate)


def matched_filter(rec: Signal, template: Signal) -> Signal:
    """Cross-correlate ``rec`` with ``template`` (pulse compression).

    The output has the same length and sample rate as ``rec`` and is
    aligned so that an echo starting at sample ``k`` produces its
    correlation peak at index ``k``:

        out[k] = sum_n rec[k + n] * template[n]
    """
    if rec.sample_rate != template.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: rec {rec.sample_rate} Hz vs template {template.sample_rate} Hz"
        )
    nt = len(template)
    if nt > len(rec):
        raise ValueError("template longer than recording")
    full = fftconvolve(rec.samples, template.samples[::-1], mode="full")
    out = full[nt - 1 : nt - 1 + len(rec)]
    return Signal(out, rec.sample_rate)
