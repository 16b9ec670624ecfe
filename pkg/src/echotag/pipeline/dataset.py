"""Dataset synthesis, splitting, and on-disk persistence.

A dataset directory holds one ``SQRD`` tensor file per sample plus a
``manifest.json`` with the generator configuration, seeds, labels,
per-sample scene metadata, and split assignment. Everything is
deterministic given the master seed, so re-running a synthesis command
reproduces byte-identical tensor files and the same manifest hash.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from ..array import Direction, build_irregular_geometry, load_geometry
from ..beamform import apply_weights, compute_weights
from ..cochlea import FilterbankSpec, to_cochleogram
from ..errors import ConfigError, DataError
from ..simulate import (
    DEFAULT_SPACING,
    Reflector,
    Scene,
    constellation_layout,
    reflector_radii,
    scene_to_dict,
    synthesize_scene,
)
from ..waveform import WaveformSpec, fm_sweep, matched_filter

FORMAT_VERSION = 1
SQRD_MAGIC = b"SQRD"
DTYPE_F32_LE = 1
DEFAULT_FRACTIONS = (0.64, 0.16, 0.20)


@dataclass(frozen=True)
class SynthConfig:
    """Everything the generator needs to build one dataset."""

    n_samples: int
    seed: int = 0
    label_mode: str = "multi"  # "multi": 4-reflector constellations; "single": isolated reflector
    n_classes: int = 7
    labels_per_sample: int = 4
    distinct_classes: bool = True
    snr_db: float | None = 20.0
    gamma_max_deg: float = 60.0
    range_bounds: tuple[float, float] = (0.5, 3.0)
    spacing: float = DEFAULT_SPACING
    radius_bounds: tuple[float, float] = (0.010, 0.040)
    cut_factor: float = 0.66
    beta: float = 0.8
    window: float = 0.02
    propagation: str = "point"
    apply_matched_filter: bool = True
    waveform: WaveformSpec = field(default_factory=WaveformSpec)
    geometry_seed: int = 7
    n_mics: int = 32
    aperture: float = 0.08
    geometry_file: str | None = None
    n_channels: int = 40
    n_frames: int = 106

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.label_mode not in ("multi", "single"):
            raise ConfigError("label_mode must be 'multi' or 'single'")
        if not 0 < self.labels_per_sample <= self.n_classes:
            raise ConfigError("labels_per_sample must be in [1, n_classes]")
        lo, hi = self.range_bounds
        if not 0.3 < lo <= hi <= 3.0:
            raise ConfigError("range_bounds must satisfy 0.3 < min <= max <= 3.0")
        if not 0 <= self.gamma_max_deg <= 60.0 + 1e-9:
            raise ConfigError("gamma_max_deg must be in [0, 60]")


@dataclass(frozen=True, eq=False)
class LabeledSample:
    image: np.ndarray  # (n_channels, n_frames) float32 in [0, 1]
    label: np.ndarray | int  # binary vector (multi) or class index (single)
    meta: dict


@dataclass(eq=False)
class Dataset:
    samples: list[LabeledSample]
    manifest: dict
    splits: dict[str, np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self.samples)

    def arrays(self, split: str | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Stack (images, labels) for one split (or the whole dataset)."""
        if split is None:
            idx = np.arange(len(self.samples))
        else:
            if self.splits is None or split not in self.splits:
                raise DataError(f"dataset has no split {split!r}")
            idx = self.splits[split]
        images = np.stack([self.samples[i].image for i in idx])
        labels = np.stack([np.asarray(self.samples[i].label) for i in idx])
        return images, labels


def sample_scene(cfg: SynthConfig, rng: np.random.Generator, radii: np.ndarray) -> tuple[Scene, np.ndarray | int]:
    """Draw one scene plus its label under the configured policy."""
    gamma = math.radians(rng.uniform(-cfg.gamma_max_deg, cfg.gamma_max_deg))
    center_range = rng.uniform(*cfg.range_bounds)
    if cfg.label_mode == "single":
        cls = int(rng.integers(cfg.n_classes))
        reflectors = (Reflector(cls, float(radii[cls]), cfg.cut_factor, (0.0, 0.0)),)
        scene = Scene(reflectors, center_range, gamma, 0, cfg.snr_db)
        return scene, cls
    constellation_id = int(rng.integers(5))
    classes = np.sort(
        rng.choice(cfg.n_classes, size=cfg.labels_per_sample, replace=not cfg.distinct_classes)
    )
    offsets = constellation_layout(constellation_id, cfg.spacing)
    reflectors = tuple(
        Reflector(int(c), float(radii[c]), cfg.cut_factor, (float(o[0]), float(o[1])))
        for c, o in zip(classes, offsets)
    )
    label = np.zeros(cfg.n_classes, dtype=np.int8)
    label[classes] = 1
    scene = Scene(reflectors, center_range, gamma, constellation_id, cfg.snr_db)
    return scene, label


def synthesize_dataset(cfg: SynthConfig, progress: bool = False) -> Dataset:
    """Generate the full labeled cochleogram dataset for ``cfg``.

    Per sample: draw a scene, render the multichannel recording, beamform
    toward the constellation center (boresight), matched-filter with the
    emitted sweep, and convert to a cochleogram image.
    """
    if cfg.geometry_file:
        geom = load_geometry(cfg.geometry_file)
    else:
        geom = build_irregular_geometry(cfg.geometry_seed, cfg.n_mics, cfg.aperture)
    wf = cfg.waveform
    chirp = fm_sweep(wf)
    band = (min(wf.f_start, wf.f_end), max(wf.f_start, wf.f_end))
    n_rec = int(round(cfg.window * wf.sample_rate))
    weights = compute_weights(geom, Direction(0.0, 0.0), (), n_rec, wf.sample_rate, band=band)
    fb = FilterbankSpec(
        sample_rate=wf.sample_rate, n_channels=cfg.n_channels, f_min=band[0], f_max=band[1]
    )
    radii = reflector_radii(cfg.n_classes, *cfg.radius_bounds)

    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_samples)
    samples: list[LabeledSample] = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        scene, label = sample_scene(cfg, rng, radii)
        noise_seed = int(rng.integers(2**31 - 1))
        rec = synthesize_scene(
            scene, geom, wf, noise_seed, window=cfg.window, beta=cfg.beta, propagation=cfg.propagation
        )
        sig = apply_weights(rec.channels, weights, wf.sample_rate)
        if cfg.apply_matched_filter:
            sig = matched_filter(sig, chirp)
        coch = to_cochleogram(sig, fb, cfg.n_frames)
        meta = {"scene": scene_to_dict(scene), "noise_seed": noise_seed, "index": i}
        samples.append(LabeledSample(coch.values.astype(np.float32), label, meta))
        if progress and (i + 1) % 200 == 0:
            print(f"  synthesized {i + 1}/{cfg.n_samples}")

    manifest = {
        "format_version": FORMAT_VERSION,
        "generator": _config_dict(cfg),
        "geometry_name": geom.name,
        "n_samples": cfg.n_samples,
    }
    return Dataset(samples=samples, manifest=manifest)


def split_dataset(
    ds: Dataset, fractions: tuple[float, float, float] = DEFAULT_FRACTIONS, seed: int = 0
) -> Dataset:
    """Assign train/val/test splits by seeded shuffle + contiguous cut."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    n = len(ds)
    if n == 0:
        raise DataError("cannot split an empty dataset")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    n_val = min(n_val, n - n_train)
    splits = {
        "train": perm[:n_train],
        "val": perm[n_train : n_train + n_val],
        "test": perm[n_train + n_val :],
    }
    manifest = dict(ds.manifest)
    manifest["split"] = {"fractions": list(fractions), "seed": seed}
    return Dataset(samples=ds.samples, manifest=manifest, splits=splits)


# -- binary tensor files ------------------------------------------------------


def write_tensor(path, array: np.ndarray) -> None:
    """Write an ``SQRD`` tensor file (float32 little-endian, row-major)."""
    data = np.ascontiguousarray(array, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(SQRD_MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, DTYPE_F32_LE, data.ndim))
        fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
        fh.write(data.tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != SQRD_MAGIC:
        raise DataError(f"{path}: not a tensor file (bad magic)")
    version, dtype_code, ndim = struct.unpack_from("<III", raw, 4)
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported tensor format version {version}")
    if dtype_code != DTYPE_F32_LE:
        raise DataError(f"{path}: unsupported dtype code {dtype_code}")
    dims = struct.unpack_from(f"<{ndim}I", raw, 16)
    count = int(np.prod(dims)) if ndim else 1
    return np.frombuffer(raw, dtype="<f4", count=count, offset=16 + 4 * ndim).reshape(dims).copy()


# -- dataset directories ------------------------------------------------------


def save_dataset(ds: Dataset, directory) -> str:
    """Write the dataset into a fresh directory; returns the manifest hash."""
    os.makedirs(directory, exist_ok=True)
    if os.listdir(directory):
        raise DataError(f"refusing to write into non-empty directory {directory}")
    entries = []
    for i, sample in enumerate(ds.samples):
        fname = f"sample_{i:06d}.sqrd"
        write_tensor(os.path.join(directory, fname), sample.image)
        label = sample.label
        entries.append(
            {
                "file": fname,
                "label": int(label) if np.isscalar(label) or np.ndim(label) == 0 else [int(v) for v in label],
                "meta": sample.meta,
            }
        )
    manifest = dict(ds.manifest)
    manifest["samples"] = entries
    if ds.splits is not None:
        manifest.setdefault("split", {})
        manifest["split"]["assignment"] = {k: [int(i) for i in v] for k, v in ds.splits.items()}
    digest = manifest_hash(manifest)
    manifest["manifest_hash"] = digest
    tmp = os.path.join(directory, "manifest.json.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    os.replace(tmp, os.path.join(directory, "manifest.json"))
    return digest


def load_dataset(directory) -> Dataset:
    manifest_path = os.path.join(directory, "manifest.json")
    if not os.path.exists(manifest_path):
        raise DataError(f"{directory}: missing manifest.json")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    samples = []
    for entry in manifest.get("samples", []):
        image = read_tensor(os.path.join(directory, entry["file"]))
        label = entry["label"]
        label = int(label) if isinstance(label, int) else np.asarray(label, dtype=np.int8)
        samples.append(LabeledSample(image=image, label=label, meta=entry.get("meta", {})))
    splits = None
    assignment = manifest.get("split", {}).get("assignment")
    if assignment is not None:
        splits = {k: np.asarray(v, dtype=int) for k, v in assignment.items()}
    return Dataset(samples=samples, manifest=manifest, splits=splits)


def manifest_hash(manifest: dict) -> str:
    """SHA-256 of the canonical manifest JSON (hash field excluded)."""
    clean = {k: v for k, v in manifest.items() if k != "manifest_hash"}
    return hashlib.sha256(json.dumps(clean, sort_keys=True).encode("utf-8")).hexdigest()


def label_histogram(ds: Dataset) -> np.ndarray:
    """Per-class positive counts (multi) or class counts (single)."""
    n_classes = ds.manifest["generator"]["n_classes"]
    counts = np.zeros(n_classes, dtype=int)
    for s in ds.samples:
        if np.ndim(s.label) == 0:
            counts[int(s.label)] += 1
        else:
            counts += np.asarray(s.label, dtype=int)
    return counts


def _config_dict(cfg: SynthConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["range_bounds"] = list(cfg.range_bounds)
    d["radius_bounds"] = list(cfg.radius_bounds)
    return d
