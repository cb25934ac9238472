"""Recordings to labeled, gated, normalized feature frames.

A campaign on disk is a set of WAV files plus a JSON manifest mapping channel
ids to file, label (H/D), axle, component and a free-text damage description.
Frames whose mean shaft frequency falls outside the gating band are dropped;
the survivors carry their features, label, channel and original frame index.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dsp import FeatureVector, MfccConfig, feature_matrix
from .errors import DataError, FormatError
from .synth import AudioRecording

BAND_LOW_HZ = 42.0
BAND_HIGH_HZ = 45.0

CACHE_MAGIC = b"ABFC"
CACHE_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    file: str
    label: str
    axle: str
    component: str
    description: str


@dataclass
class Manifest:
    """Channel metadata table; file paths are kept relative to base_dir."""

    entries: dict[str, ManifestEntry]
    base_dir: Path

    def channels(self) -> list[str]:
        return list(self.entries)

    def wav_path(self, channel_id: str) -> Path:
        if channel_id not in self.entries:
            raise DataError(f"channel not in manifest: {channel_id}")
        return self.base_dir / self.entries[channel_id].file

    def label(self, channel_id: str) -> str:
        if channel_id not in self.entries:
            raise DataError(f"channel not in manifest: {channel_id}")
        return self.entries[channel_id].label

    def select(self, label: str | None = None, component: str | None = None,
               axles: tuple[str, ...] | None = None) -> list[str]:
        """Channel ids matching every given filter, in manifest order."""
        out = []
        for channel_id, e in self.entries.items():
            if label is not None and e.label != label:
                continue
            if component is not None and e.component != component:
                continue
            if axles is not None and e.axle not in axles:
                continue
            out.append(channel_id)
        return out


def _check_entry(channel_id: str, entry: ManifestEntry) -> None:
    if entry.label not in ("H", "D"):
        raise DataError(f"{channel_id}: label must be H or D, got {entry.label!r}")
    if entry.component not in ("motor", "gearbox"):
        raise DataError(
            f"{channel_id}: component must be motor or gearbox, got {entry.component!r}")


def save_manifest(manifest: Manifest, path) -> None:
    payload = {
        channel_id: {
            "file": e.file,
            "label": e.label,
            "axle": e.axle,
            "component": e.component,
            "description": e.description,
        }
        for channel_id, e in manifest.entries.items()
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise DataError(f"duplicate channel id in manifest: {key}")
        seen[key] = value
    return seen


def load_manifest(path) -> Manifest:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"),
                         object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise DataError(f"{path}: manifest must be a JSON object")
    entries = {}
    for channel_id, fields in raw.items():
        try:
            entry = ManifestEntry(
                file=str(fields["file"]),
                label=str(fields["label"]),
                axle=str(fields.get("axle", "")),
                component=str(fields.get("component", "motor")),
                description=str(fields.get("description", "")),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: bad entry for {channel_id} ({exc})") from exc
        _check_entry(channel_id, entry)
        entries[channel_id] = entry
    return Manifest(entries=entries, base_dir=path.parent)


@dataclass(frozen=True)
class FrameRecord:
    """One gated frame: features plus label, origin and shaft frequency."""

    features: FeatureVector
    label: str
    channel_id: str
    mean_rot_freq: float
    frame_index: int


def gate_frames(recording: AudioRecording, config: MfccConfig, label: str,
                band_low: float = BAND_LOW_HZ,
                band_high: float = BAND_HIGH_HZ) -> list[FrameRecord]:
    """Features for the frames whose mean rotational frequency lies in
    [band_low, band_high] (both ends inclusive)."""
    track = recording.rotational_freq_track
    if track is None or len(track) == 0:
        raise DataError(f"{recording.channel_id}: recording has no rotational track")
    num_frames = len(recording.samples) // config.dft_size
    if len(track) != num_frames:
        raise DataError(
            f"{recording.channel_id}: track length {len(track)} does not match "
            f"{num_frames} frames of {config.dft_size} samples")
    rows = feature_matrix(recording.samples, config)
    records = []
    for index in range(num_frames):
        f_bar = float(track[index])
        if band_low <= f_bar <= band_high:
            records.append(FrameRecord(
                features=FeatureVector(coeffs=rows[index]),
                label=label,
                channel_id=recording.channel_id,
                mean_rot_freq=f_bar,
                frame_index=index,
            ))
    return records


def in_band(frames: list[FrameRecord], band_low: float = BAND_LOW_HZ,
            band_high: float = BAND_HIGH_HZ) -> list[FrameRecord]:
    return [f for f in frames if band_low <= f.mean_rot_freq <= band_high]


# --- train/test splitting ---------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    """How to partition gated frames into train and test sets."""

    mode: str
    train_size: int
    test_size: int
    seed: int = 0
    train_channels: tuple[str, ...] | None = None
    test_channels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.mode not in ("random", "by_channel"):
            raise DataError(f"unknown split mode: {self.mode!r}")
        if self.train_size <= 0 or self.test_size <= 0:
            raise DataError("train_size and test_size must be positive")
        if self.mode == "by_channel":
            if not self.train_channels or not self.test_channels:
                raise DataError("by_channel split needs train and test channel lists")
            overlap = set(self.train_channels) & set(self.test_channels)
            if overlap:
                raise DataError(
                    f"channels in both train and test: {', '.join(sorted(overlap))}")


def _subsample_per_channel(frames: list[FrameRecord], channels: tuple[str, ...],
                           size: int, rng: np.random.Generator) -> list[FrameRecord]:
    """Draw `size` frames spread as evenly as possible over the channels."""
    by_channel = {c: [] for c in channels}
    for frame in frames:
        if frame.channel_id in by_channel:
            by_channel[frame.channel_id].append(frame)
    base, extra = divmod(size, len(channels))
    picked = []
    for rank, channel in enumerate(channels):
        want = base + (1 if rank < extra else 0)
        pool = by_channel[channel]
        if len(pool) < want:
            raise DataError(
                f"channel {channel} has {len(pool)} gated frames, need {want}")
        take = np.sort(rng.permutation(len(pool))[:want])
        picked.extend(pool[i] for i in take)
    return picked


def make_split(frames: list[FrameRecord],
               spec: SplitSpec) -> tuple[list[FrameRecord], list[FrameRecord]]:
    """Partition frames into train/test sets; deterministic given spec.seed."""
    rng = np.random.default_rng(spec.seed)
    if spec.mode == "random":
        total = spec.train_size + spec.test_size
        if total > len(frames):
            raise DataError(
                f"split needs {total} frames, only {len(frames)} available")
        order = rng.permutation(len(frames))
        train = [frames[i] for i in order[: spec.train_size]]
        test = [frames[i] for i in order[spec.train_size : total]]
        return train, test

    train = _subsample_per_channel(frames, spec.train_channels, spec.train_size, rng)
    test = _subsample_per_channel(frames, spec.test_channels, spec.test_size, rng)
    return train, test


def label_counts(frames: list[FrameRecord]) -> dict[str, int]:
    counts = {"H": 0, "D": 0}
    for frame in frames:
        counts[frame.label] = counts.get(frame.label, 0) + 1
    return counts


# --- feature normalization ---------------------------------------------------


@dataclass(frozen=True)
class NormalizationStats:
    """Per-coefficient z-scoring parameters, fitted on training data only."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=float))
        if self.mean.shape != self.std.shape:
            raise DataError("normalization mean/std shapes differ")
        if np.any(self.std <= 0):
            raise DataError("normalization std must be strictly positive")


def features_as_matrix(frames: list[FrameRecord]) -> np.ndarray:
    return np.array([f.features.coeffs for f in frames])


def fit_normalization(frames: list[FrameRecord]) -> NormalizationStats:
    if len(frames) < 2:
        raise DataError(
            f"normalization needs at least two frames, got {len(frames)}")
    matrix = features_as_matrix(frames)
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    degenerate = np.flatnonzero(std == 0)
    if degenerate.size:
        raise DataError(
            "zero-variance coefficient(s): "
            + ", ".join(f"c{i + 1}" for i in degenerate))
    return NormalizationStats(mean=mean, std=std)


def apply_normalization(frames: list[FrameRecord],
                        stats: NormalizationStats) -> list[FrameRecord]:
    out = []
    for frame in frames:
        coeffs = (frame.features.coeffs - stats.mean) / stats.std
        out.append(replace(frame, features=FeatureVector(coeffs=coeffs, normalized=True)))
    return out


# --- per-channel feature cache -----------------------------------------------


def _cache_dtype(num_coeffs: int) -> np.dtype:
    return np.dtype([("rot", "<f8"), ("coeffs", "<f8", (num_coeffs,)),
                     ("idx", "<u8")])


def write_cache(path, frames: list[FrameRecord], num_coeffs: int) -> None:
    """Binary per-channel cache of gated frames."""
    data = np.zeros(len(frames), dtype=_cache_dtype(num_coeffs))
    for i, frame in enumerate(frames):
        if len(frame.features.coeffs) != num_coeffs:
            raise DataError(
                f"frame has {len(frame.features.coeffs)} coefficients, "
                f"cache expects {num_coeffs}")
        data[i] = (frame.mean_rot_freq, frame.features.coeffs, frame.frame_index)
    header = CACHE_MAGIC + struct.pack("<HHQ", CACHE_VERSION, num_coeffs, len(frames))
    Path(path).write_bytes(header + data.tobytes())


def read_cache(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (coeffs matrix, rotational frequencies, frame indices)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"feature cache not found: {path}")
    blob = path.read_bytes()
    if len(blob) < 16 or blob[:4] != CACHE_MAGIC:
        raise FormatError(f"{path}: not a feature cache (bad magic)")
    version, num_coeffs, count = struct.unpack("<HHQ", blob[4:16])
    if version > CACHE_VERSION:
        raise FormatError(
            f"{path}: cache version {version} is newer than supported "
            f"({CACHE_VERSION})")
    dtype = _cache_dtype(num_coeffs)
    expected = 16 + count * dtype.itemsize
    if len(blob) != expected:
        raise FormatError(
            f"{path}: truncated or padded cache ({len(blob)} bytes, "
            f"expected {expected})")
    data = np.frombuffer(blob[16:], dtype=dtype)
    coeffs = data["coeffs"].reshape(count, num_coeffs).copy()
    return coeffs, data["rot"].copy(), data["idx"].astype(np.int64)


def frames_from_cache(path, label: str, channel_id: str) -> list[FrameRecord]:
    coeffs, rot, idx = read_cache(path)
    return [
        FrameRecord(
            features=FeatureVector(coeffs=coeffs[i]),
            label=label,
            channel_id=channel_id,
            mean_rot_freq=float(rot[i]),
            frame_index=int(idx[i]),
        )
        for i in range(len(rot))
    ]
