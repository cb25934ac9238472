"""End-to-end experiment protocols over a campaign directory.

Four named experiments are built in:

* seen-motor:    pooled random split over the motor channels A1_b1, A2_b2
                 (damaged) and B1_b1, B2_b2 (healthy).
* seen-gearbox:  damaged A2_b3 versus every healthy gearbox channel at the
                 axles B1, B2 and A1 that the manifest provides.
* unseen-A2b2:   train on A1_b1 + B1_b1, test on A2_b2 + B2_b2.
* unseen-A1b1:   train on A2_b2 + B2_b2, test on A1_b1 + B1_b1.

Each run writes a self-contained results directory: the model, a training
log, the evaluation report (JSON and text), and a config echo sufficient to
replay the run. Nothing written depends on wall-clock time or absolute
paths, so identical inputs and seeds reproduce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import audiofile, dataset, metrics, mlp
from .dataset import Manifest, SplitSpec
from .dsp import MfccConfig
from .errors import ConfigError, DataError
from .mlp import TrainConfig
from .synth import AudioRecording

EXPERIMENT_NAMES = ("seen-motor", "seen-gearbox", "unseen-A2b2", "unseen-A1b1")

SEEN_SPLIT = (8000, 2000)
UNSEEN_SPLIT = (5000, 5000)

CACHE_META_NAME = "features_meta.json"


@dataclass(frozen=True)
class ExperimentSpec:
    """A named protocol resolved against a manifest."""

    name: str
    channels: tuple[str, ...]
    split: SplitSpec


def _require_channels(manifest: Manifest, channels) -> None:
    missing = [c for c in channels if c not in manifest.entries]
    if missing:
        raise DataError(
            "manifest is missing required channel(s): " + ", ".join(missing))


def named_experiment(name: str, manifest: Manifest, seed: int,
                     train_size: int | None = None,
                     test_size: int | None = None) -> ExperimentSpec:
    """Resolve one of the built-in experiment names against a manifest."""
    if name == "seen-motor":
        channels = ("A1_b1", "A2_b2", "B1_b1", "B2_b2")
        _require_channels(manifest, channels)
        split = SplitSpec(
            mode="random", seed=seed,
            train_size=train_size or SEEN_SPLIT[0],
            test_size=test_size or SEEN_SPLIT[1])
        return ExperimentSpec(name=name, channels=channels, split=split)

    if name == "seen-gearbox":
        _require_channels(manifest, ("A2_b3",))
        healthy = tuple(manifest.select(label="H", component="gearbox",
                                        axles=("B1", "B2", "A1")))
        if not healthy:
            raise DataError(
                "no healthy gearbox channels at axles B1/B2/A1 in the manifest")
        channels = ("A2_b3",) + healthy
        split = SplitSpec(
            mode="random", seed=seed,
            train_size=train_size or SEEN_SPLIT[0],
            test_size=test_size or SEEN_SPLIT[1])
        return ExperimentSpec(name=name, channels=channels, split=split)

    if name in ("unseen-A2b2", "unseen-A1b1"):
        if name == "unseen-A2b2":
            train_channels, test_channels = ("A1_b1", "B1_b1"), ("A2_b2", "B2_b2")
        else:
            train_channels, test_channels = ("A2_b2", "B2_b2"), ("A1_b1", "B1_b1")
        _require_channels(manifest, train_channels + test_channels)
        split = SplitSpec(
            mode="by_channel", seed=seed,
            train_size=train_size or UNSEEN_SPLIT[0],
            test_size=test_size or UNSEEN_SPLIT[1],
            train_channels=train_channels, test_channels=test_channels)
        return ExperimentSpec(name=name, channels=train_channels + test_channels,
                              split=split)

    raise ConfigError(
        f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENT_NAMES)}")


# --- feature extraction with cache reuse -------------------------------------


def mfcc_signature(config: MfccConfig, band: tuple[float, float]) -> dict:
    return {
        "dft_size": config.dft_size,
        "num_channels": config.num_channels,
        "sample_rate": config.sample_rate,
        "freq_low": config.freq_low,
        "freq_high": config.freq_high,
        "num_coeffs": config.num_coeffs,
        "window_kind": config.window_kind,
        "log_floor": config.log_floor,
        "band": [band[0], band[1]],
    }


def load_recording(manifest: Manifest, channel_id: str) -> AudioRecording:
    wav_path = manifest.wav_path(channel_id)
    samples, fs = audiofile.read_wav(wav_path)
    track = audiofile.read_rot_track(wav_path)
    return AudioRecording(samples=samples, fs=fs, channel_id=channel_id,
                          rotational_freq_track=track)


def extract_channel(manifest: Manifest, channel_id: str, config: MfccConfig,
                    band: tuple[float, float], cache_path) -> tuple[int, int]:
    """Gate and cache one channel; returns (total frames, gated frames)."""
    recording = load_recording(manifest, channel_id)
    if float(recording.fs) != float(config.sample_rate):
        raise DataError(
            f"{channel_id}: WAV sample rate {recording.fs} Hz does not match "
            f"configured {config.sample_rate} Hz")
    frames = dataset.gate_frames(recording, config, manifest.label(channel_id),
                                 band_low=band[0], band_high=band[1])
    dataset.write_cache(cache_path, frames, config.num_coeffs)
    total = len(recording.samples) // config.dft_size
    return total, len(frames)


def ensure_caches(manifest: Manifest, channels, config: MfccConfig,
                  band: tuple[float, float], features_dir,
                  log=None) -> dict[str, Path]:
    """Extract any channel whose cache is stale or absent; reuse the rest."""
    features_dir = Path(features_dir)
    features_dir.mkdir(parents=True, exist_ok=True)
    meta_path = features_dir / CACHE_META_NAME
    signature = mfcc_signature(config, band)
    reusable = False
    if meta_path.exists():
        try:
            reusable = json.loads(meta_path.read_text(encoding="utf-8")) == signature
        except json.JSONDecodeError:
            reusable = False
    paths = {}
    for channel_id in channels:
        cache_path = features_dir / f"{channel_id}.abfc"
        if not (reusable and cache_path.exists()):
            total, gated = extract_channel(manifest, channel_id, config, band,
                                           cache_path)
            if log:
                log(f"{channel_id}: {total} frames, {gated} gated")
        elif log:
            log(f"{channel_id}: cache reused")
        paths[channel_id] = cache_path
    meta_path.write_text(json.dumps(signature, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    return paths


def load_frames(manifest: Manifest, cache_paths: dict[str, Path]):
    frames = []
    for channel_id, path in cache_paths.items():
        frames.extend(dataset.frames_from_cache(path, manifest.label(channel_id),
                                                channel_id))
    return frames


# --- the run itself -----------------------------------------------------------


def split_and_train(frames, split: SplitSpec, train_config: TrainConfig,
                    normalize: bool = True,
                    hidden_dims=mlp.DEFAULT_HIDDEN_DIMS):
    """Split, optionally fit/apply z-scoring, train; returns a run dict."""
    train_frames, test_frames = dataset.make_split(frames, split)
    stats = None
    if normalize:
        stats = dataset.fit_normalization(train_frames)
        train_frames = dataset.apply_normalization(train_frames, stats)
        test_frames = dataset.apply_normalization(test_frames, stats)
    x_train = dataset.features_as_matrix(train_frames)
    y_train = np.array([mlp.label_index(f.label) for f in train_frames])
    model, history = mlp.train(x_train, y_train, train_config,
                               hidden_dims=hidden_dims, norm_stats=stats)
    train_probs = mlp.predict_batch(model, x_train)
    train_accuracy = float(np.mean(train_probs.argmax(axis=1) == y_train))
    return {
        "model": model,
        "loss_history": history,
        "train_frames": train_frames,
        "test_frames": test_frames,
        "train_accuracy": train_accuracy,
    }


def evaluate_frames(model: mlp.MlpModel, frames) -> metrics.MetricsReport:
    """Score frames with a model, applying its stored normalization to raw
    features (already-normalized frames are used as-is)."""
    if not frames:
        raise DataError("nothing to evaluate: no frames")
    x = dataset.features_as_matrix(frames)
    if x.shape[1] != model.dims[0]:
        raise DataError(
            f"feature dimension {x.shape[1]} does not match model input "
            f"{model.dims[0]}")
    if model.norm_stats is not None and not frames[0].features.normalized:
        x = (x - model.norm_stats.mean) / model.norm_stats.std
    probs = mlp.predict_batch(model, x)
    predicted = [mlp.LABELS[i] for i in probs.argmax(axis=1)]
    truths = [f.label for f in frames]
    return metrics.metrics(metrics.confusion(predicted, truths))


def run_experiment(manifest: Manifest, spec: ExperimentSpec,
                   mfcc_config: MfccConfig, train_config: TrainConfig,
                   band: tuple[float, float], normalize: bool,
                   out_dir, features_dir=None, log=None) -> dict:
    """Extract, split, train and evaluate one named experiment."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if features_dir is None:
        features_dir = manifest.base_dir / "features"
    caches = ensure_caches(manifest, spec.channels, mfcc_config, band,
                           features_dir, log=log)
    frames = load_frames(manifest, caches)
    run = split_and_train(frames, spec.split, train_config, normalize=normalize)
    report = evaluate_frames(run["model"], run["test_frames"])

    model_path = out_dir / "model.abmm"
    mlp.save_model(run["model"], model_path)
    echo = {
        "experiment": spec.name,
        "channels": {c: manifest.entries[c].label for c in spec.channels},
        "mfcc": mfcc_signature(mfcc_config, band),
        "normalize": normalize,
        "split": {
            "mode": spec.split.mode,
            "train_size": spec.split.train_size,
            "test_size": spec.split.test_size,
            "seed": spec.split.seed,
            "train_channels": spec.split.train_channels,
            "test_channels": spec.split.test_channels,
        },
        "train_config": {
            "epochs": train_config.epochs,
            "learning_rate": train_config.learning_rate,
            "batch_size": train_config.batch_size,
            "beta1": train_config.beta1,
            "beta2": train_config.beta2,
            "adam_eps": train_config.adam_eps,
            "seed": train_config.seed,
            "shuffle_each_epoch": train_config.shuffle_each_epoch,
        },
    }
    train_log = dict(echo)
    train_log.update({
        "train_class_counts": dataset.label_counts(run["train_frames"]),
        "test_class_counts": dataset.label_counts(run["test_frames"]),
        "per_epoch_loss": run["loss_history"],
        "final_train_accuracy": run["train_accuracy"],
    })
    (out_dir / "train_log.json").write_text(
        json.dumps(train_log, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    metrics.write_report(report, out_dir / "report.json", out_dir / "report.txt")
    experiment_echo = dict(train_log)
    experiment_echo["report"] = metrics.report_to_dict(report)
    (out_dir / "experiment.json").write_text(
        json.dumps(experiment_echo, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return {
        "report": report,
        "model_path": model_path,
        "train_log": train_log,
        "out_dir": out_dir,
    }
