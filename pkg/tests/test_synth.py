import dataclasses
import json

import numpy as np
import pytest

from bearingsound import dsp, synth
from bearingsound.errors import ConfigError, DataError


def tone_config(seed=123, duration=4.0, fault=None, noise=0.0,
                harmonics=((1, 1.0),), f_r=43.0):
    return synth.SynthConfig(
        fs=25600.0, duration=duration, seed=seed,
        rotational_freq_profile=((0.0, f_r),),
        harmonic_amplitudes=harmonics, noise_level=noise, fault=fault)


def outer_fault(amplitude=2.0, ratio=3.5, jitter=0.0):
    return synth.FaultSpec(
        fault_kind=synth.OUTER_RING, fault_freq_ratio=ratio,
        impulse_amplitude=amplitude, resonance_freq=4000.0,
        resonance_decay=900.0, severity_jitter=jitter)


class TestConfigValidation:
    def test_bad_profile_rejected(self):
        with pytest.raises(ConfigError):
            synth.SynthConfig(rotational_freq_profile=((0.0, 43.0), (0.0, 44.0)))
        with pytest.raises(ConfigError):
            synth.SynthConfig(rotational_freq_profile=((0.0, -1.0),))
        with pytest.raises(ConfigError):
            synth.SynthConfig(rotational_freq_profile=())

    def test_bad_fault_rejected(self):
        with pytest.raises(ConfigError):
            synth.FaultSpec(fault_kind="cage", fault_freq_ratio=3.5,
                            impulse_amplitude=1.0, resonance_freq=4000.0,
                            resonance_decay=900.0)
        with pytest.raises(ConfigError):
            outer_fault(ratio=-1.0)
        with pytest.raises(ConfigError):
            synth.SynthConfig(fault=dataclasses.replace(
                outer_fault(), resonance_freq=20000.0))

    def test_negative_noise_rejected(self):
        with pytest.raises(ConfigError):
            synth.SynthConfig(noise_level=-0.1)


class TestSingleToneRecording:
    def test_energy_concentrates_at_the_shaft_line(self):
        # 43 Hz sits between DFT bins (bin 3.44 at fs=25600, N=2048), so a
        # Hann-windowed frame keeps ~96% of the energy in the two nearest
        # bins and >99% within two bins either side; the peak is the nearest
        # bin. Asserting the main-lobe concentration captures the intent
        # without fighting window leakage.
        recording = synth.synth_recording(tone_config(), "tone")
        frame = recording.samples[2048 : 2 * 2048]
        ps = dsp.power_spectrum(frame, dsp.window_samples("hann", 2048))
        assert int(np.argmax(ps)) == 3  # nearest bin to 43 Hz at 12.5 Hz/bin
        main_lobe = ps[2:6].sum()
        assert main_lobe > 0.99 * ps.sum()

    def test_track_reports_constant_speed(self):
        recording = synth.synth_recording(tone_config(), "tone")
        assert len(recording.rotational_freq_track) == len(recording.samples) // 2048
        np.testing.assert_allclose(recording.rotational_freq_track, 43.0)


class TestFaultTrain:
    def test_impulse_spacing_matches_rate_arithmetic(self):
        config = tone_config(fault=outer_fault())
        indices = synth.fault_impulse_indices(config)
        expected = 25600.0 / (3.5 * 43.0)  # ~170.1 samples
        spacing = np.diff(indices)
        assert abs(spacing.mean() - expected) < 0.5
        assert np.all(np.abs(spacing - expected) <= 1.0)

    def test_squared_residual_autocorrelation_peaks_at_spacing(self):
        config = tone_config(fault=outer_fault(), noise=0.05)
        healthy = synth.synth_recording(
            dataclasses.replace(config, fault=None), "h")
        faulted = synth.synth_recording(config, "d")
        residual = (faulted.samples - healthy.samples) ** 2
        residual -= residual.mean()
        lags = np.arange(100, 251)
        ac = np.array([np.dot(residual[:-lag], residual[lag:]) for lag in lags])
        peak_lag = int(lags[np.argmax(ac)])
        expected = 25600.0 / (3.5 * 43.0)
        assert abs(peak_lag - expected) <= 1.0

    def test_no_fault_means_no_impulses(self):
        assert synth.fault_impulse_indices(tone_config()).size == 0


class TestDeterminismAndSeparation:
    def test_same_seed_is_bit_identical(self):
        config = tone_config(fault=outer_fault(jitter=0.3), noise=0.1)
        a = synth.synth_recording(config, "x")
        b = synth.synth_recording(config, "x")
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.rotational_freq_track, b.rotational_freq_track)

    def test_healthy_and_faulted_differ_only_by_impact_component(self):
        config = tone_config(fault=outer_fault(jitter=0.2), noise=0.1,
                             harmonics=((1, 1.0), (2, 0.5), (3, 0.3)))
        faulted = synth.synth_recording(config, "d")
        healthy = synth.synth_recording(
            dataclasses.replace(config, fault=None), "h")
        fault_only = synth.synth_recording(dataclasses.replace(
            config,
            harmonic_amplitudes=tuple((h, 0.0) for h, _ in config.harmonic_amplitudes),
            noise_level=0.0), "f")
        diff = faulted.samples - healthy.samples
        first = synth.fault_impulse_indices(config).min()
        assert np.all(diff[:first] == 0.0)
        np.testing.assert_allclose(diff, fault_only.samples, atol=1e-9)

    def test_noise_rms_matches_level(self):
        config = synth.SynthConfig(
            fs=25600.0, duration=10.0, seed=9,
            rotational_freq_profile=((0.0, 43.0),),
            harmonic_amplitudes=((1, 0.0),), noise_level=0.25)
        recording = synth.synth_recording(config, "n")
        rms = float(np.sqrt(np.mean(recording.samples**2)))
        assert abs(rms - 0.25) <= 0.02 * 0.25

    def test_track_stays_within_profile_range(self):
        profile = ((0.0, 43.0), (2.0, 44.5), (4.0, 36.0), (6.0, 43.5))
        config = synth.SynthConfig(fs=25600.0, duration=6.0, seed=1,
                                   rotational_freq_profile=profile,
                                   harmonic_amplitudes=((1, 1.0),))
        recording = synth.synth_recording(config, "p")
        track = recording.rotational_freq_track
        assert track.min() >= 36.0 - 1e-9
        assert track.max() <= 44.5 + 1e-9


class TestCampaign:
    def test_default_scenario_mirrors_damage_table(self):
        scenario = synth.default_scenario(seed=3, duration=2.0)
        assert [s.channel_id for s in scenario] == [
            "A1_b1", "A2_b2", "A2_b3", "B1_b1", "B2_b2", "B2_b3"]
        labels = [s.label for s in scenario]
        assert labels.count("D") == 3 and labels.count("H") == 3
        by_id = {s.channel_id: s for s in scenario}
        assert by_id["A1_b1"].config.fault.fault_kind == synth.INNER_RING
        assert by_id["A1_b1"].config.fault.amplitude_modulated_by_shaft
        assert by_id["A2_b2"].config.fault.fault_kind == synth.OUTER_RING
        assert not by_id["A2_b2"].config.fault.amplitude_modulated_by_shaft
        assert by_id["A2_b3"].component == "gearbox"
        for channel in ("B1_b1", "B2_b2", "B2_b3"):
            assert by_id[channel].config.fault is None

    def test_severity_ordering(self):
        scenario = synth.default_scenario(seed=3, duration=2.0)
        by_id = {s.channel_id: s for s in scenario}
        early = by_id["A1_b1"].config.fault.impulse_amplitude
        developed = by_id["A2_b2"].config.fault.impulse_amplitude
        assert early < developed

    def test_campaign_generates_every_channel(self):
        scenario = synth.default_scenario(seed=5, duration=1.0)
        recordings = synth.synth_campaign(scenario)
        assert set(recordings) == {s.channel_id for s in scenario}

    def test_empty_scenario_gives_empty_campaign(self):
        assert synth.synth_campaign([]) == {}

    def test_duplicate_channel_rejected(self):
        scenario = synth.default_scenario(seed=5, duration=1.0)
        with pytest.raises(DataError, match="A1_b1"):
            synth.synth_campaign([scenario[0], scenario[0]])

    def test_profiles_dip_out_of_band(self):
        for spec in synth.default_scenario(seed=8, duration=100.0):
            freqs = [f for _, f in spec.config.rotational_freq_profile]
            assert min(freqs) < 42.0
            assert 42.0 <= freqs[0] <= 45.0
            assert 42.0 <= freqs[-1] <= 45.0


class TestScenarioFile:
    def test_round_trip_through_json(self, tmp_path):
        payload = [{
            "channel": "C1", "label": "D", "axle": "A9", "component": "motor",
            "description": "test fault", "seed": 42, "duration": 1.0,
            "profile": [[0.0, 43.0], [0.5, 44.0]],
            "harmonics": [[1, 1.0], [2, 0.5]], "noise_level": 0.1,
            "fault": {"kind": "outer_ring", "freq_ratio": 3.5,
                      "amplitude": 1.5, "resonance_freq": 4000.0,
                      "resonance_decay": 900.0, "modulated": False,
                      "jitter": 0.1},
        }]
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(payload))
        (spec,) = synth.scenario_from_json(path)
        assert spec.channel_id == "C1"
        assert spec.config.fault.fault_freq_ratio == 3.5
        assert spec.config.rotational_freq_profile == ((0.0, 43.0), (0.5, 44.0))

    def test_missing_and_invalid_files(self, tmp_path):
        with pytest.raises(DataError):
            synth.scenario_from_json(tmp_path / "nope.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(DataError):
            synth.scenario_from_json(bad)
        not_list = tmp_path / "obj.json"
        not_list.write_text("{}")
        with pytest.raises(DataError):
            synth.scenario_from_json(not_list)
        incomplete = tmp_path / "incomplete.json"
        incomplete.write_text('[{"channel": "C1"}]')
        with pytest.raises(DataError):
            synth.scenario_from_json(incomplete)
