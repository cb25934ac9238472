"""Command-line front end.

Subcommands cover the full workflow: ``synth`` writes a campaign of WAV files
plus manifest, ``extract`` turns them into per-channel feature caches,
``train``/``eval`` fit and score a classifier over an explicit split,
``scatter`` exports 2-D coefficient views, and ``experiment`` runs a named
protocol end to end.

Exit codes are stable for scripting: 0 success, 1 usage error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import audiofile, dataset, experiments, metrics, mlp, synth
from .dataset import SplitSpec
from .dsp import MfccConfig
from .errors import ConfigError, DataError, NumericError, PipelineError
from .mlp import TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageExit(message)


class _UsageExit(Exception):
    pass


def _parse_band(text: str) -> tuple[float, float]:
    try:
        low_text, high_text = text.split(":", 1)
        low, high = float(low_text), float(high_text)
    except ValueError:
        raise ConfigError(f"--band expects LO:HI, got {text!r}") from None
    if low > high:
        raise ConfigError(f"--band low {low} exceeds high {high}")
    return low, high


def _parse_channels(text: str) -> tuple[str, ...]:
    channels = tuple(c.strip() for c in text.split(",") if c.strip())
    if not channels:
        raise ConfigError("expected a comma-separated channel list")
    return channels


def _add_mfcc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fs", type=float, default=25600.0, help="sample rate in Hz")
    p.add_argument("--frame-len", type=int, default=2048,
                   help="frame length in samples (power of two)")
    p.add_argument("--mel-channels", type=int, default=26,
                   help="number of Mel filters")
    p.add_argument("--coeffs", type=int, default=13,
                   help="number of cepstral coefficients")
    p.add_argument("--band", type=str, default="42:45",
                   help="rotational gating band LO:HI in Hz")


def _add_split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--split", choices=("random", "by-channel"), default="random")
    p.add_argument("--channels", type=str, default=None,
                   help="channels to pool for a random split (default: all)")
    p.add_argument("--train-channels", type=str, default=None)
    p.add_argument("--test-channels", type=str, default=None)
    p.add_argument("--train-size", type=int, default=8000)
    p.add_argument("--test-size", type=int, default=2000)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--no-normalize", action="store_true",
                   help="skip per-coefficient z-scoring of the features")


def _mfcc_config(args) -> MfccConfig:
    return MfccConfig(dft_size=args.frame_len, num_channels=args.mel_channels,
                      sample_rate=args.fs, num_coeffs=args.coeffs)


def _split_spec(args) -> SplitSpec:
    mode = args.split.replace("-", "_")
    train_channels = _parse_channels(args.train_channels) if args.train_channels else None
    test_channels = _parse_channels(args.test_channels) if args.test_channels else None
    return SplitSpec(mode=mode, train_size=args.train_size,
                     test_size=args.test_size, seed=args.seed,
                     train_channels=train_channels, test_channels=test_channels)


def _train_config(args) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                       batch_size=args.batch, seed=args.seed)


def _pool_channels(args, manifest) -> tuple[str, ...]:
    if args.split == "by-channel":
        spec_channels = (_parse_channels(args.train_channels or "")
                         + _parse_channels(args.test_channels or ""))
        return spec_channels
    if args.channels:
        return _parse_channels(args.channels)
    return tuple(manifest.channels())


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.scenario:
        scenario = synth.scenario_from_json(args.scenario)
    elif args.default_campaign:
        scenario = synth.default_scenario(args.seed, duration=args.duration,
                                          fs=args.fs)
    else:
        raise ConfigError("pass --default-campaign or --scenario FILE")
    recordings = synth.synth_campaign(scenario)
    band = _parse_band(args.band)
    entries = {}
    for spec in scenario:
        recording = recordings[spec.channel_id]
        wav_name = f"{spec.channel_id}.wav"
        audiofile.write_wav(out_dir / wav_name, recording.samples, recording.fs)
        audiofile.write_rot_track(out_dir / wav_name,
                                  recording.rotational_freq_track)
        entries[spec.channel_id] = dataset.ManifestEntry(
            file=wav_name, label=spec.label, axle=spec.axle,
            component=spec.component, description=spec.description)
        track = recording.rotational_freq_track
        gated = int(np.sum((track >= band[0]) & (track <= band[1])))
        duration = len(recording.samples) / recording.fs
        print(f"{spec.channel_id}: {duration:.1f} s, {len(track)} frames, "
              f"~{gated} in {band[0]:g}-{band[1]:g} Hz [{spec.label}]")
    manifest = dataset.Manifest(entries=entries, base_dir=out_dir)
    dataset.save_manifest(manifest, out_dir / "manifest.json")
    print(f"wrote {len(entries)} channels to {out_dir}")
    return EXIT_OK


def cmd_extract(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    config = _mfcc_config(args)
    band = _parse_band(args.band)
    channels = _parse_channels(args.channels) if args.channels else manifest.channels()
    features_dir = Path(args.out)
    experiments.ensure_caches(manifest, channels, config, band, features_dir,
                              log=print)
    return EXIT_OK


def _load_split_frames(args, manifest, config, band):
    channels = _pool_channels(args, manifest)
    features_dir = Path(args.features)
    caches = {}
    for channel_id in channels:
        path = features_dir / f"{channel_id}.abfc"
        if not path.exists():
            raise DataError(f"feature cache not found: {path} (run extract first)")
        caches[channel_id] = path
    return experiments.load_frames(manifest, caches)


def cmd_train(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    config = _mfcc_config(args)
    band = _parse_band(args.band)
    frames = _load_split_frames(args, manifest, config, band)
    split = _split_spec(args)
    run = experiments.split_and_train(frames, split, _train_config(args),
                                      normalize=not args.no_normalize)
    model_path = Path(args.out)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    mlp.save_model(run["model"], model_path)
    log = {
        "seed": args.seed,
        "mfcc": experiments.mfcc_signature(config, band),
        "normalize": not args.no_normalize,
        "split": {
            "mode": split.mode,
            "train_size": split.train_size,
            "test_size": split.test_size,
            "seed": split.seed,
            "train_channels": split.train_channels,
            "test_channels": split.test_channels,
        },
        "train_config": {
            "epochs": args.epochs, "learning_rate": args.lr,
            "batch_size": args.batch, "seed": args.seed,
        },
        "train_class_counts": dataset.label_counts(run["train_frames"]),
        "per_epoch_loss": run["loss_history"],
        "final_train_accuracy": run["train_accuracy"],
    }
    log_path = model_path.with_suffix(".train_log.json")
    log_path.write_text(json.dumps(log, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    print(f"trained {run['model'].dims} on {len(run['train_frames'])} frames; "
          f"train accuracy {100 * run['train_accuracy']:.2f}%")
    print(f"model: {model_path}")
    print(f"log:   {log_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    model = mlp.load_model(args.model)
    config = _mfcc_config(args)
    band = _parse_band(args.band)
    frames = _load_split_frames(args, manifest, config, band)
    split = _split_spec(args)
    _, test_frames = dataset.make_split(frames, split)
    report = experiments.evaluate_frames(model, test_frames)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics.write_report(report, out_dir / "report.json", out_dir / "report.txt")
    print(metrics.report_to_text(report), end="")
    return EXIT_OK


def cmd_scatter(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    try:
        a_text, b_text = args.pair.split(":", 1)
        pair = (int(a_text), int(b_text))
    except ValueError:
        raise ConfigError(f"--pair expects A:B coefficient indices, got {args.pair!r}")
    features_dir = Path(args.features)
    caches = {}
    channels = _parse_channels(args.channels) if args.channels else manifest.channels()
    for channel_id in channels:
        path = features_dir / f"{channel_id}.abfc"
        if not path.exists():
            raise DataError(f"feature cache not found: {path} (run extract first)")
        caches[channel_id] = path
    frames = experiments.load_frames(manifest, caches)
    rows = metrics.export_scatter(frames, pair, args.out)
    print(f"wrote {rows} rows to {args.out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    data_dir = Path(args.data)
    manifest_path = data_dir / "manifest.json"
    if not manifest_path.exists():
        if not args.synth_first:
            raise DataError(
                f"no manifest at {manifest_path}; synthesize a campaign first "
                "or pass --synth-first")
        synth_args = argparse.Namespace(
            out=str(data_dir), scenario=None, default_campaign=True,
            seed=args.seed, duration=args.duration, fs=args.fs, band=args.band)
        cmd_synth(synth_args)
    manifest = dataset.load_manifest(manifest_path)
    config = _mfcc_config(args)
    band = _parse_band(args.band)
    spec = experiments.named_experiment(
        args.name, manifest, seed=args.seed,
        train_size=args.train_size, test_size=args.test_size)
    out_dir = Path(args.out) if args.out else data_dir / "results" / args.name
    result = experiments.run_experiment(
        manifest, spec, config, _train_config(args), band,
        normalize=not args.no_normalize, out_dir=out_dir,
        features_dir=data_dir / "features", log=print)
    report = result["report"]
    print(f"{args.name}: accuracy {metrics.round_half_up(report.accuracy):.2f}%  "
          f"TPR {metrics.round_half_up(report.tpr):.2f}%  "
          f"TNR {metrics.round_half_up(report.tnr):.2f}%")
    print(f"results: {result['out_dir']}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="bearingsound",
                     description="Airborne bearing-fault detection pipeline")
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic campaign")
    p.add_argument("--default-campaign", action="store_true")
    p.add_argument("--scenario", type=str, default=None,
                   help="JSON scenario file (alternative to --default-campaign)")
    p.add_argument("--duration", type=float, default=600.0,
                   help="seconds of audio per channel")
    p.add_argument("--fs", type=float, default=25600.0)
    p.add_argument("--band", type=str, default="42:45")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract per-channel feature caches")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--channels", type=str, default=None)
    _add_mfcc_flags(p)
    p.add_argument("--out", type=str, required=True, help="features directory")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a classifier over a split")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--features", type=str, required=True)
    _add_mfcc_flags(p)
    _add_split_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", type=str, required=True, help="model file path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on the test partition")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--features", type=str, required=True)
    p.add_argument("--model", type=str, required=True)
    _add_mfcc_flags(p)
    _add_split_flags(p)
    p.add_argument("--out", type=str, required=True, help="report directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scatter", help="export a 2-D coefficient scatter table")
    p.add_argument("--manifest", type=str, required=True)
    p.add_argument("--features", type=str, required=True)
    p.add_argument("--channels", type=str, default=None)
    p.add_argument("--pair", type=str, required=True, help="A:B, 1-based")
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("experiment", help="run a named end-to-end protocol")
    p.add_argument("name", choices=experiments.EXPERIMENT_NAMES)
    p.add_argument("--data", type=str, required=True, help="campaign directory")
    p.add_argument("--synth-first", action="store_true",
                   help="generate the default campaign if the data dir is empty")
    p.add_argument("--duration", type=float, default=600.0)
    _add_mfcc_flags(p)
    p.add_argument("--train-size", type=int, default=None)
    p.add_argument("--test-size", type=int, default=None)
    _add_train_flags(p)
    p.add_argument("--out", type=str, default=None, help="results directory")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageExit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
