"""Synthetic multichannel echo recordings of reflector constellations.

The reflector echo signature is a two-path cavity interference model: a rim
reflection plus a delayed return from inside the hollow hemisphere,

    H(f) = a(aspect) * (1 + beta * exp(-j 2 pi f tau)),
    tau  = 2 * radius * cut_factor / c,

which produces spectral notches whose spacing 1/tau scales inversely with
the reflector radius — the property the size classifier keys on. Propagation
uses spherical spreading and per-microphone path delays by default; a
far-field (plane-wave) mode exists for beamformer validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from .array import SPEED_OF_SOUND, ArrayGeometry, Direction, unit_propagation_vector
from .waveform import Signal, WaveformSpec, fm_sweep

DEFAULT_BETA = 0.8  # cavity-return amplitude relative to the rim reflection
DEFAULT_CUT_FACTOR = 0.66
DEFAULT_WINDOW = 0.02  # s, covers a 3 m round trip plus the sweep
DEFAULT_SPACING = 0.12  # m, inter-reflector spacing on the backplate
_MIN_ASPECT_GAIN = 0.1

LAYOUT_NAMES = ("square", "diamond", "t", "l", "line")


@dataclass(frozen=True)
class Reflector:
    """One hollow-hemisphere reflector mounted on the backplate."""

    size_class: int
    radius: float
    cut_factor: float = DEFAULT_CUT_FACTOR
    offset: tuple[float, float] = (0.0, 0.0)  # (horizontal, vertical) on the plate, m

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if not 0 < self.cut_factor <= 1:
            raise ValueError("cut_factor must be in (0, 1]")
        if self.size_class < 0:
            raise ValueError("size_class must be >= 0")

    @property
    def cavity_delay_factor(self) -> float:
        """Round-trip extra path into the cavity, meters (delay = this / c)."""
        return 2.0 * self.radius * self.cut_factor


@dataclass(frozen=True)
class Scene:
    """A reflector constellation in front of the array.

    The backplate center sits on boresight at ``center_range``;
    ``orientation`` rotates the plate horizontally (about the vertical
    axis through its center). ``noise_snr_db=None`` disables noise.
    Datasets use 4 reflectors; fewer are allowed for tests and for
    isolated-reflector (single-label) training scenes.
    """

    reflectors: tuple[Reflector, ...]
    center_range: float
    orientation: float = 0.0
    constellation_id: int = 0
    noise_snr_db: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "reflectors", tuple(self.reflectors))
        if not 0.3 < self.center_range <= 3.0:
            raise ValueError("center_range must lie in (0.3 m, 3 m]")
        if abs(self.orientation) > math.radians(60.0) + 1e-9:
            raise ValueError("orientation must be within +-60 degrees")
        if not 0 <= self.constellation_id < len(LAYOUT_NAMES):
            raise ValueError(f"constellation_id must be in [0, {len(LAYOUT_NAMES)})")


@dataclass(frozen=True, eq=False)
class MultiChannelRecording:
    """Time-domain samples, one row per microphone."""

    channels: np.ndarray  # (n_mics, n_samples)
    sample_rate: float
    geometry: ArrayGeometry

    def __post_init__(self) -> None:
        if self.channels.ndim != 2:
            raise ValueError("channels must be 2-D (n_mics, n_samples)")
        if self.channels.shape[0] != self.geometry.n_mics:
            raise ValueError("channel count must equal geometry microphone count")
        if not np.all(np.isfinite(self.channels)):
            raise ValueError("channels must be finite")


def reflector_radii(n_classes: int = 7, r_min: float = 0.010, r_max: float = 0.040) -> np.ndarray:
    """Log-spaced radius table indexed by size class, meters."""
    if n_classes < 2:
        raise ValueError("need at least 2 size classes")
    return np.geomspace(r_min, r_max, n_classes)


def constellation_layout(constellation_id: int, spacing: float = DEFAULT_SPACING) -> np.ndarray:
    """2-D backplate offsets of the 4 reflectors for one layout, shape (4, 2).

    Layouts 0..4: square, diamond, T, L, line. ``spacing`` scales the
    whole pattern.
    """
    if not 0 <= constellation_id < len(LAYOUT_NAMES):
        raise ValueError(f"constellation_id must be in [0, {len(LAYOUT_NAMES)})")
    s = spacing
    layouts = (
        [(-s / 2, -s / 2), (-s / 2, s / 2), (s / 2, -s / 2), (s / 2, s / 2)],  # square
        [(-s / 2, 0.0), (0.0, s / 2), (s / 2, 0.0), (0.0, -s / 2)],  # diamond
        [(-s, s / 2), (0.0, s / 2), (s, s / 2), (0.0, -s / 2)],  # T
        [(-s / 2, s), (-s / 2, 0.0), (-s / 2, -s), (s / 2, -s)],  # L
        [(-1.5 * s, 0.0), (-0.5 * s, 0.0), (0.5 * s, 0.0), (1.5 * s, 0.0)],  # line
    )
    return np.array(layouts[constellation_id])


def reflector_position(scene: Scene, index: int) -> np.ndarray:
    """3-D position of one reflector given plate placement and orientation."""
    refl = scene.reflectors[index]
    h, v = refl.offset
    g = scene.orientation
    center = np.array([scene.center_range, 0.0, 0.0])
    horizontal = np.array([-math.sin(g), math.cos(g), 0.0])  # plate h-axis after rotation
    vertical = np.array([0.0, 0.0, 1.0])
    return center + h * horizontal + v * vertical


def reflector_direction(scene: Scene, index: int, geom: ArrayGeometry | None = None) -> Direction:
    """Azimuth/elevation of a reflector as seen from the array origin."""
    p = reflector_position(scene, index)
    az = math.atan2(p[1], p[0])
    el = math.atan2(p[2], math.hypot(p[0], p[1]))
    return Direction(az, el)


def reflector_aspect(scene: Scene, index: int) -> float:
    """Angle between the plate's facing normal and the path back to the array."""
    p = reflector_position(scene, index)
    g = scene.orientation
    normal = np.array([-math.cos(g), -math.sin(g), 0.0])  # plate faces the array at g=0
    to_array = -p / np.linalg.norm(p)
    return float(np.arccos(np.clip(normal @ to_array, -1.0, 1.0)))


def reflector_frequency_response(
    reflector: Reflector,
    aspect: float,
    freqs: np.ndarray,
    c: float = SPEED_OF_SOUND,
    beta: float = DEFAULT_BETA,
) -> np.ndarray:
    """Two-path cavity interference response evaluated on a frequency grid.

    Destructive interference puts notches at ``f_k = (k + 1/2) / tau`` with
    spacing ``1 / tau``; the off-axis gain is ``cos(aspect)`` clamped to 0.1.
    """
    tau = reflector.cavity_delay_factor / c
    gain = max(math.cos(aspect), _MIN_ASPECT_GAIN)
    return gain * (1.0 + beta * np.exp(-2j * np.pi * np.asarray(freqs) * tau))


def synthesize_scene(
    scene: Scene,
    geom: ArrayGeometry,
    wf: WaveformSpec,
    seed: int,
    window: float = DEFAULT_WINDOW,
    c: float = SPEED_OF_SOUND,
    beta: float = DEFAULT_BETA,
    propagation: str = "point",
) -> MultiChannelRecording:
    """Render the multichannel echo recording of a scene.

    For each reflector the emitted chirp is filtered by its frequency
    response, delayed by the emitter->reflector->microphone path, and scaled
    by ``1 / (range_out * range_back)`` spreading. Echo tails may be cut by
    the end of the window, but an echo whose *arrival* falls outside the
    window is an error. White Gaussian noise is added at ``noise_snr_db``
    relative to the strongest echo's in-sweep power; the result is
    deterministic given ``seed``.

    ``propagation="plane"`` switches to far-field plane-wave delays and
    common ``1/range^2`` scaling (used for beamformer validation).
    """
    if propagation not in ("point", "plane"):
        raise ValueError("propagation must be 'point' or 'plane'")
    fs = wf.sample_rate
    n = int(round(window * fs))
    chirp = fm_sweep(wf)
    if n < len(chirp):
        raise ValueError("window shorter than the emitted sweep; increase window")

    max_extra = max((r.cavity_delay_factor for r in scene.reflectors), default=0.0) / c
    nfft = next_fast_len(n + len(chirp) + int(math.ceil(max_extra * fs)) + 16)
    freqs = np.fft.rfftfreq(nfft, 1.0 / fs)
    spec = np.fft.rfft(chirp.samples, nfft)

    X = np.zeros((geom.n_mics, freqs.size), dtype=complex)
    peak_power = 0.0
    for i, refl in enumerate(scene.reflectors):
        p = reflector_position(scene, i)
        H = reflector_frequency_response(refl, reflector_aspect(scene, i), freqs, c, beta)
        if propagation == "point":
            r_out = np.linalg.norm(p - geom.emitter_position)
            r_back = np.linalg.norm(p - geom.mic_positions, axis=1)
            delays = (r_out + r_back) / c
            amps = 1.0 / (r_out * r_back)
        else:
            r = np.linalg.norm(p)
            u = p / r
            delays = 2.0 * r / c - (geom.mic_positions @ u) / c
            amps = np.full(geom.n_mics, 1.0 / (r * r))
        if np.max(delays) > window:
            raise ValueError(
                f"echo delay {np.max(delays) * 1e3:.2f} ms beyond the "
                f"{window * 1e3:.2f} ms recording window; increase window"
            )
        phase = np.exp(-2j * np.pi * np.multiply.outer(delays, freqs))
        X += (spec * H) * amps[:, None] * phase
        # In-sweep power of this echo on its loudest channel (Parseval).
        echo_energy = np.sum(np.abs(spec * H) ** 2) / nfft
        peak_power = max(peak_power, float(np.max(amps)) ** 2 * echo_energy / len(chirp))

    channels = np.fft.irfft(X, nfft)[:, :n]

    if scene.noise_snr_db is not None and math.isfinite(scene.noise_snr_db):
        ref_power = peak_power if scene.reflectors else 1.0
        noise_std = math.sqrt(ref_power * 10.0 ** (-scene.noise_snr_db / 10.0))
        rng = np.random.default_rng(seed)
        channels = channels + noise_std * rng.standard_normal((geom.n_mics, n))

    return MultiChannelRecording(channels=channels, sample_rate=fs, geometry=geom)


def plane_wave_recording(
    geom: ArrayGeometry,
    direction: Direction,
    sig: Signal,
    c: float = SPEED_OF_SOUND,
) -> MultiChannelRecording:
    """Far-field helper: one plane wave from ``direction`` carrying ``sig``.

    Per-microphone fractional delays are applied in the frequency domain;
    a common offset keeps all delays non-negative so nothing wraps.
    """
    u = unit_propagation_vector(direction)
    tau = -(geom.mic_positions @ u) / c
    tau = tau - tau.min()
    n = len(sig)
    nfft = next_fast_len(n + int(math.ceil(tau.max() * sig.sample_rate)) + 16)
    freqs = np.fft.rfftfreq(nfft, 1.0 / sig.sample_rate)
    spec = np.fft.rfft(sig.samples, nfft)
    phase = np.exp(-2j * np.pi * np.multiply.outer(tau, freqs))
    channels = np.fft.irfft(spec * phase, nfft)[:, :n]
    return MultiChannelRecording(channels=channels, sample_rate=sig.sample_rate, geometry=geom)


def scene_to_dict(scene: Scene) -> dict:
    """Plain-JSON-serializable scene description (used by dataset manifests)."""
    return {
        "reflectors": [
            {
                "size_class": r.size_class,
                "radius": r.radius,
                "cut_factor": r.cut_factor,
                "offset": list(r.offset),
            }
            for r in scene.reflectors
        ],
        "center_range": scene.center_range,
        "orientation": scene.orientation,
        "constellation_id": scene.constellation_id,
        "noise_snr_db": scene.noise_snr_db,
    }


def scene_from_dict(d: dict) -> Scene:
    reflectors = tuple(
        Reflector(
            size_class=int(r["size_class"]),
            radius=float(r["radius"]),
            cut_factor=float(r["cut_factor"]),
            offset=(float(r["offset"][0]), float(r["offset"][1])),
        )
        for r in d["reflectors"]
    )
    return Scene(
        reflectors=reflectors,
        center_range=float(d["center_range"]),
        orientation=float(d["orientation"]),
        constellation_id=int(d["constellation_id"]),
        noise_snr_db=None if d.get("noise_snr_db") is None else float(d["noise_snr_db"]),
    )
