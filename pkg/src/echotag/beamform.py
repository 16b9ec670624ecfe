"""Frequency-domain delay-and-sum beamforming with null-steering.

Weights are computed independently per FFT bin. For a steer direction d
and null directions n_i, each bin gets

    w_d(f)  : steering vector toward d,
    C(f)    : constraint matrix whose columns are steering vectors of the n_i,
    P_C(f)  : orthogonal projector onto span(C),
    w(f)^H  = w_d(f)^H (I - P_C(f)),

so the response satisfies w^H C = 0 exactly (up to round-off). Bins outside
the processing band are zeroed: the emitted sweep carries no energy there
and keeping them would only amplify noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array import SPEED_OF_SOUND, ArrayGeometry, Direction, steering_matrix, steering_vector
from .waveform import Signal

DEFAULT_BAND = (25_000.0, 80_000.0)
RANK_TOL = 1e-8  # relative singular-value cutoff for the null set


class DegenerateNullSetError(ValueError):
    """Raised when the null steering vectors are (numerically) rank deficient.

    Callers may drop duplicate or nearly coincident null directions and retry.
    """


def constraint_matrix(
    geom: ArrayGeometry,
    nulls: list[Direction] | tuple[Direction, ...],
    freq: float,
    c: float = SPEED_OF_SOUND,
) -> np.ndarray:
    """Stack null-direction steering vectors as columns, shape (n_mics, n_nulls).

    An empty null list yields a matrix with zero columns. More nulls than
    ``n_mics - 1`` leaves no degrees of freedom for the steered response.
    """
    if len(nulls) >= geom.n_mics:
        raise ValueError("underdetermined array: need n_nulls < n_mics")
    if not nulls:
        return np.zeros((geom.n_mics, 0), dtype=complex)
    return np.stack([steering_vector(geom, d, freq, c) for d in nulls], axis=1)


def projection_matrix(C: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthogonal projector onto the column space of ``C``.

    Computed as ``U U^H`` from the thin SVD instead of the textbook
    ``C (C^H C)^{-1} C^H``: closely spaced null directions make ``C^H C``
    ill-conditioned, while the SVD keeps the projector Hermitian and
    idempotent to round-off.
    """
    C = np.asarray(C)
    n = C.shape[0]
    if C.shape[1] == 0:
        return np.zeros((n, n), dtype=complex)
    U, s, _ = np.linalg.svd(C, full_matrices=False)
    if s[-1] <= rank_tol * s[0]:
        raise DegenerateNullSetError(
            f"degenerate null set: singular values span {s[0]:.3e}..{s[-1]:.3e}"
        )
    return U @ U.conj().T


def null_steered_weights(w_d: np.ndarray, C: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Project the steer weights onto the complement of the null space.

    Returns ``w`` with ``w^H = w_d^H (I - P_C)``; with no nulls this is
    ``w_d`` unchanged.
    """
    w_d = np.asarray(w_d, dtype=complex)
    if C.shape[1] == 0:
        return w_d.copy()
    if C.shape[0] != w_d.shape[0]:
        raise ValueError("dimension mismatch between weights and constraint matrix")
    P = projection_matrix(C, rank_tol)
    # P is Hermitian, so w = (I - P)^H w_d = w_d - P w_d.
    return w_d - P @ w_d


@dataclass(frozen=True, eq=False)
class BeamWeights:
    """Per-bin beamforming weights over an rFFT frequency grid."""

    weights: np.ndarray  # (n_bins, n_mics) complex
    freqs: np.ndarray  # (n_bins,) Hz
    steer: Direction
    nulls: tuple[Direction, ...] = field(default_factory=tuple)
    band: tuple[float, float] = DEFAULT_BAND

    def __post_init__(self) -> None:
        if self.weights.ndim != 2 or self.weights.shape[0] != self.freqs.shape[0]:
            raise ValueError("weights must be (n_bins, n_mics) matching the frequency grid")


def compute_weights(
    geom: ArrayGeometry,
    steer: Direction,
    nulls: list[Direction] | tuple[Direction, ...],
    n_samples: int,
    sample_rate: float,
    c: float = SPEED_OF_SOUND,
    band: tuple[float, float] = DEFAULT_BAND,
) -> BeamWeights:
    """Compute (null-steered) weights for every in-band rFFT bin.

    Raises
    ------
    DegenerateNullSetError
        If the null set is rank deficient at any in-band bin.
    """
    nulls = tuple(nulls)
    if len(nulls) >= geom.n_mics:
        raise ValueError("underdetermined array: need n_nulls < n_mics")
    freqs = np.fft.rfftfreq(n_samples, 1.0 / sample_rate)
    in_band = (freqs >= band[0]) & (freqs <= band[1])
    weights = np.zeros((freqs.size, geom.n_mics), dtype=complex)

    fb = freqs[in_band]
    w_d = steering_matrix(geom, steer, fb, c)  # (nb, M)
    if nulls:
        C = np.stack([steering_matrix(geom, d, fb, c) for d in nulls], axis=2)  # (nb, M, k)
        U, s, _ = np.linalg.svd(C, full_matrices=False)
        if np.any(s[:, -1] <= RANK_TOL * s[:, 0]):
            raise DegenerateNullSetError("degenerate null set over the processing band")
        # w = w_d - U (U^H w_d), batched over bins
        coeff = np.einsum("bmk,bm->bk", U.conj(), w_d)
        w_d = w_d - np.einsum("bmk,bk->bm", U, coeff)
    weights[in_band] = w_d
    return BeamWeights(weights=weights, freqs=freqs, steer=steer, nulls=nulls, band=band)


def apply_weights(channels: np.ndarray, bw: BeamWeights, sample_rate: float) -> Signal:
    """Beamform a multichannel block with precomputed weights.

    ``Y(f) = w(f)^H X(f) / n_mics``; the output is the real part of the
    inverse FFT, same length and sample rate as the input.
    """
    n_mics, n = channels.shape
    if bw.weights.shape[1] != n_mics:
        raise ValueError("channel count does not match weights")
    X = np.fft.rfft(channels, axis=1)  # (M, F)
    if X.shape[1] != bw.weights.shape[0]:
        raise ValueError("recording length does not match the weight frequency grid")
    Y = np.einsum("fm,mf->f", bw.weights.conj(), X) / n_mics
    return Signal(np.fft.irfft(Y, n), sample_rate)


def beamform(
    rec,
    geom: ArrayGeometry,
    steer: Direction,
    nulls: list[Direction] | tuple[Direction, ...] = (),
    c: float = SPEED_OF_SOUND,
    band: tuple[float, float] = DEFAULT_BAND,
) -> Signal:
    """Steer a multichannel recording toward ``steer``, nulling ``nulls``.

    With an empty null list this reduces to conventional frequency-domain
    delay-and-sum. ``rec`` is a :class:`~echotag.simulate.MultiChannelRecording`.
    """
    if rec.channels.shape[0] != geom.n_mics:
        raise ValueError(
            f"recording has {rec.channels.shape[0]} channels, geometry has {geom.n_mics} mics"
        )
    bw = compute_weights(geom, steer, nulls, rec.channels.shape[1], rec.sample_rate, c, band)
    return apply_weights(rec.channels, bw, rec.sample_rate)


def beam_pattern(
    geom: ArrayGeometry,
    steer: Direction,
    nulls: list[Direction] | tuple[Direction, ...],
    freq: float,
    probe_dirs: list[Direction],
    c: float = SPEED_OF_SOUND,
) -> np.ndarray:
    """Array response in dB at one frequency over a grid of probe directions.

    Normalized so the steer direction reads 0 dB (unless a null coincides
    with it, in which case the raw response ``|w^H sv| / n_mics`` is
    returned in dB). Exact nulls are floored at -300 dB.
    """
    C = constraint_matrix(geom, tuple(nulls), freq, c)
    w = null_steered_weights(steering_vector(geom, steer, freq, c), C)
    ref = np.abs(w.conj() @ steering_vector(geom, steer, freq, c)) / geom.n_mics
    if ref < 1e-12:
        ref = 1.0  # null placed on the steer direction; report absolute response
    resp = np.empty(len(probe_dirs))
    for i, d in enumerate(probe_dirs):
        resp[i] = np.abs(w.conj() @ steering_vector(geom, d, freq, c)) / geom.n_mics
    return 20.0 * np.log10(np.maximum(resp / ref, 1e-15))
