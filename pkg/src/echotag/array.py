"""Microphone-array geometry and far-field steering vectors.

Conventions used throughout the package: the array boresight is the +x
axis, azimuth rotates in the xy-plane toward +y, and elevation tilts
toward +z. All positions are in meters, angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

SPEED_OF_SOUND = 343.0  # m/s, dry air at 20 degC

_MIN_MIC_SPACING = 1e-6  # m, below this two mics count as coincident
_REJECTION_ATTEMPTS = 100_000


@dataclass(frozen=True)
class Direction:
    """A far-field look direction (azimuth, elevation) in radians."""

    azimuth: float
    elevation: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.azimuth) and math.isfinite(self.elevation)):
            raise ValueError("direction angles must be finite")
        if not -math.pi <= self.azimuth <= math.pi:
            raise ValueError(f"azimuth {self.azimuth!r} outside [-pi, pi]")
        if not -math.pi / 2 <= self.elevation <= math.pi / 2:
            raise ValueError(f"elevation {self.elevation!r} outside [-pi/2, pi/2]")


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Immutable microphone layout plus the emitter position.

    Parameters
    ----------
    mic_positions : ndarray, shape (n_mics, 3)
        Microphone coordinates in meters.
    emitter_position : ndarray, shape (3,)
        Emitter coordinate in meters.
    name : str
        Identifier carried into dataset manifests.
    """

    mic_positions: np.ndarray
    emitter_position: np.ndarray
    name: str = "array"

    def __post_init__(self) -> None:
        pos = np.array(self.mic_positions, dtype=float)
        emit = np.array(self.emitter_position, dtype=float).reshape(3)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("mic_positions must have shape (n_mics, 3)")
        if pos.shape[0] < 2:
            raise ValueError("need at least 2 microphones")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(emit)):
            raise ValueError("positions must be finite")
        if pdist(pos).min() <= _MIN_MIC_SPACING:
            raise ValueError("coincident microphones (pairwise distance <= 1e-6 m)")
        pos.setflags(write=False)
        emit.setflags(write=False)
        object.__setattr__(self, "mic_positions", pos)
        object.__setattr__(self, "emitter_position", emit)

    @property
    def n_mics(self) -> int:
        return self.mic_positions.shape[0]

    @property
    def aperture(self) -> float:
        """Largest pairwise microphone distance in meters."""
        return float(pdist(self.mic_positions).max())


def build_irregular_geometry(seed: int, n_mics: int = 32, aperture: float = 0.08) -> ArrayGeometry:
    """Build a deterministic irregular planar array on a disc.

    Microphones are rejection-sampled uniformly on a disc of diameter
    ``aperture`` in the x=0 plane (so broadside coincides with the +x
    boresight), with minimum pairwise spacing ``aperture / (4 * sqrt(n_mics))``.
    The emitter sits at the origin.

    Raises
    ------
    ValueError
        If the spacing constraint cannot be met within 1e5 draws
        ("cannot satisfy spacing").
    """
    if n_mics < 2:
        raise ValueError("n_mics must be >= 2")
    if aperture <= 0:
        raise ValueError("aperture must be > 0")

    rng = np.random.default_rng(seed)
    radius = aperture / 2.0
    min_spacing = aperture / (4.0 * math.sqrt(n_mics))

    accepted: list[np.ndarray] = []
    attempts = 0
    while len(accepted) < n_mics:
        attempts += 1
        if attempts > _REJECTION_ATTEMPTS:
            raise ValueError(
                f"cannot satisfy spacing: {len(accepted)}/{n_mics} mics placed "
                f"after {_REJECTION_ATTEMPTS} attempts"
            )
        r = radius * math.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * math.pi)
        p = np.array([0.0, r * math.cos(phi), r * math.sin(phi)])
        if all(np.linalg.norm(p - q) >= min_spacing for q in accepted):
            accepted.append(p)

    return ArrayGeometry(
        mic_positions=np.vstack(accepted),
        emitter_position=np.zeros(3),
        name=f"irregular-disc-{n_mics}mic-seed{seed}",
    )


def unit_propagation_vector(direction: Direction) -> np.ndarray:
    """Unit vector pointing from the array toward ``direction``."""
    ca, sa = math.cos(direction.azimuth), math.sin(direction.azimuth)
    ce, se = math.cos(direction.elevation), math.sin(direction.elevation)
    return np.array([ce * ca, ce * sa, se])


def plane_wave_delays(geom: ArrayGeometry, direction: Direction, c: float = SPEED_OF_SOUND) -> np.ndarray:
    """Far-field arrival delays (s) of each microphone relative to the origin.

    A plane wave from ``direction`` reaches microphone ``m`` at
    ``tau_m = -(p_m . u) / c``; microphones closer to the source
    (positive projection on the propagation vector) have negative delay.
    """
    u = unit_propagation_vector(direction)
    return -(geom.mic_positions @ u) / c


def steering_vector(
    geom: ArrayGeometry, direction: Direction, freq: float, c: float = SPEED_OF_SOUND
) -> np.ndarray:
    """Narrowband array-manifold vector for a far-field direction.

    Element ``m`` is ``exp(-j 2 pi freq tau_m)`` with ``tau_m`` the
    plane-wave delay relative to the array origin, so conjugate weighting
    phase-aligns a wave arriving from ``direction``. All entries have
    unit modulus.
    """
    if c <= 0:
        raise ValueError("speed of sound must be > 0")
    tau = plane_wave_delays(geom, direction, c)
    return np.exp(-2j * np.pi * freq * tau)


def steering_matrix(
    geom: ArrayGeometry, direction: Direction, freqs: np.ndarray, c: float = SPEED_OF_SOUND
) -> np.ndarray:
    """Steering vectors stacked per frequency, shape (n_freqs, n_mics)."""
    tau = plane_wave_delays(geom, direction, c)
    return np.exp(-2j * np.pi * np.multiply.outer(np.asarray(freqs, dtype=float), tau))


def save_geometry(geom: ArrayGeometry, path) -> None:
    """Write a geometry file: ``# emitter x y z`` header then one mic per line."""
    ex, ey, ez = (float(v) for v in geom.emitter_position)
    lines = [f"# emitter {ex!r} {ey!r} {ez!r}"]
    lines += [f"{float(x)!r} {float(y)!r} {float(z)!r}" for x, y, z in geom.mic_positions]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_geometry(path, name: str | None = None) -> ArrayGeometry:
    """Parse a geometry file written by :func:`save_geometry`.

    Format: first non-blank line must read ``# emitter x y z``; every
    following non-blank line holds ``x y z`` for one microphone. Tokens
    are split on arbitrary whitespace; anything else is an error.
    """
    emitter = None
    mics: list[list[float]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if emitter is None:
                if parts[:2] != ["#", "emitter"] or len(parts) != 5:
                    raise ValueError(f"{path}:{lineno}: expected '# emitter x y z' header")
                emitter = [_parse_coord(p, path, lineno) for p in parts[2:]]
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 coordinates, got {len(parts)}")
            mics.append([_parse_coord(p, path, lineno) for p in parts])
    if emitter is None:
        raise ValueError(f"{path}: missing '# emitter x y z' header")
    if len(mics) < 2:
        raise ValueError(f"{path}: geometry needs at least 2 microphones")
    return ArrayGeometry(np.array(mics), np.array(emitter), name=name or str(path))


def _parse_coord(token: str, path, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: bad coordinate {token!r}") from None
