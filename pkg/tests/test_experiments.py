import numpy as np
import pytest

from bearingsound import dataset, experiments, mlp
from bearingsound.dsp import MfccConfig
from bearingsound.errors import ConfigError, DataError

BAND = (42.0, 45.0)


@pytest.fixture(scope="module")
def manifest(campaign_dir):
    return dataset.load_manifest(campaign_dir / "manifest.json")


class TestNamedExperiments:
    def test_seen_motor_channels(self, manifest):
        spec = experiments.named_experiment("seen-motor", manifest, seed=3)
        assert spec.channels == ("A1_b1", "A2_b2", "B1_b1", "B2_b2")
        assert spec.split.mode == "random"
        assert (spec.split.train_size, spec.split.test_size) == (8000, 2000)

    def test_seen_gearbox_resolves_healthy_gearbox_channels(self, manifest):
        spec = experiments.named_experiment("seen-gearbox", manifest, seed=3)
        assert spec.channels[0] == "A2_b3"
        healthy = spec.channels[1:]
        assert healthy  # default campaign provides B2_b3
        for channel in healthy:
            entry = manifest.entries[channel]
            assert entry.label == "H"
            assert entry.component == "gearbox"
            assert entry.axle in ("B1", "B2", "A1")

    def test_unseen_protocols_swap_train_and_test(self, manifest):
        a = experiments.named_experiment("unseen-A2b2", manifest, seed=3)
        assert a.split.train_channels == ("A1_b1", "B1_b1")
        assert a.split.test_channels == ("A2_b2", "B2_b2")
        b = experiments.named_experiment("unseen-A1b1", manifest, seed=3)
        assert b.split.train_channels == ("A2_b2", "B2_b2")
        assert b.split.test_channels == ("A1_b1", "B1_b1")
        assert (b.split.train_size, b.split.test_size) == (5000, 5000)

    def test_size_overrides(self, manifest):
        spec = experiments.named_experiment("seen-motor", manifest, seed=3,
                                            train_size=100, test_size=50)
        assert (spec.split.train_size, spec.split.test_size) == (100, 50)

    def test_unknown_name_rejected(self, manifest):
        with pytest.raises(ConfigError, match="unknown experiment"):
            experiments.named_experiment("seen-everything", manifest, seed=3)

    def test_missing_channels_detected(self, manifest, tmp_path):
        partial = dataset.Manifest(
            entries={k: v for k, v in manifest.entries.items() if k != "A2_b2"},
            base_dir=manifest.base_dir)
        with pytest.raises(DataError, match="A2_b2"):
            experiments.named_experiment("seen-motor", partial, seed=3)


class TestCaches:
    def test_caches_are_reused_when_config_matches(self, manifest, tmp_path):
        config = MfccConfig()
        messages = []
        experiments.ensure_caches(manifest, ("B1_b1",), config, BAND,
                                  tmp_path / "f", log=messages.append)
        assert "gated" in messages[0]
        messages.clear()
        experiments.ensure_caches(manifest, ("B1_b1",), config, BAND,
                                  tmp_path / "f", log=messages.append)
        assert messages == ["B1_b1: cache reused"]

    def test_config_change_invalidates_caches(self, manifest, tmp_path):
        experiments.ensure_caches(manifest, ("B1_b1",), MfccConfig(), BAND,
                                  tmp_path / "f")
        messages = []
        experiments.ensure_caches(manifest, ("B1_b1",),
                                  MfccConfig(num_coeffs=10), BAND,
                                  tmp_path / "f", log=messages.append)
        assert "gated" in messages[0]


class TestRun:
    def test_split_and_train_reports_run_details(self, manifest, tmp_path):
        config = MfccConfig()
        caches = experiments.ensure_caches(
            manifest, ("A1_b1", "A2_b2", "B1_b1", "B2_b2"), config, BAND,
            tmp_path / "f")
        frames = experiments.load_frames(manifest, caches)
        split = dataset.SplitSpec(mode="random", train_size=300, test_size=100,
                                  seed=2)
        run = experiments.split_and_train(
            frames, split, mlp.TrainConfig(epochs=3, seed=2))
        assert len(run["train_frames"]) == 300
        assert len(run["test_frames"]) == 100
        assert len(run["loss_history"]) == 3
        assert run["model"].norm_stats is not None
        report = experiments.evaluate_frames(run["model"], run["test_frames"])
        assert 0.0 <= report.accuracy <= 100.0

    def test_evaluate_applies_stored_normalization_to_raw_frames(self, manifest,
                                                                 tmp_path):
        config = MfccConfig()
        caches = experiments.ensure_caches(
            manifest, ("A2_b2", "B2_b2"), config, BAND, tmp_path / "f")
        frames = experiments.load_frames(manifest, caches)
        split = dataset.SplitSpec(mode="random", train_size=200, test_size=80,
                                  seed=5)
        run = experiments.split_and_train(
            frames, split, mlp.TrainConfig(epochs=3, seed=5))
        train_frames, test_frames = dataset.make_split(frames, split)
        raw_report = experiments.evaluate_frames(run["model"], test_frames)
        normalized_report = experiments.evaluate_frames(run["model"],
                                                        run["test_frames"])
        np.testing.assert_array_equal(raw_report.counts,
                                      normalized_report.counts)

    def test_evaluate_rejects_dimension_mismatch(self, manifest, tmp_path):
        model = mlp.init_model((10, 4, 2), seed=0)
        caches = experiments.ensure_caches(
            manifest, ("B1_b1",), MfccConfig(), BAND, tmp_path / "f")
        frames = experiments.load_frames(manifest, caches)
        with pytest.raises(DataError, match="dimension"):
            experiments.evaluate_frames(model, frames)

    def test_run_experiment_writes_complete_results(self, manifest, tmp_path):
        spec = experiments.named_experiment("seen-motor", manifest, seed=4,
                                            train_size=300, test_size=100)
        result = experiments.run_experiment(
            manifest, spec, MfccConfig(), mlp.TrainConfig(epochs=3, seed=4),
            BAND, normalize=True, out_dir=tmp_path / "out",
            features_dir=tmp_path / "f")
        out = tmp_path / "out"
        for name in ("model.abmm", "train_log.json", "report.json",
                     "report.txt", "experiment.json"):
            assert (out / name).exists()
        loaded = mlp.load_model(out / "model.abmm")
        assert loaded.dims == (13, 1024, 100, 2)
