"""Synthetic airborne bearing-sound generator.

A recording is the sum of three parts: harmonics of the shaft rotational
frequency (with random phases), broadband Gaussian noise, and, for a damaged
bearing, a train of impacts. Each impact excites an exponentially decaying
structural resonance; impact repetition follows the characteristic fault
frequency, a fixed multiple of the shaft frequency. Inner-ring trains are
amplitude-modulated by the shaft rotation (the defect moves through the load
zone once per revolution), outer-ring trains are not.

Everything is deterministic given the config seed: the harmonic-phase, noise
and fault randomness come from three independent child streams, so a healthy
and a damaged recording that share a seed differ exactly by the injected
impact component.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

FRAME_SAMPLES = 2048

OUTER_RING = "outer_ring"
INNER_RING = "inner_ring"


@dataclass(frozen=True)
class FaultSpec:
    """Parameters of one localized raceway fault."""

    fault_kind: str
    fault_freq_ratio: float
    impulse_amplitude: float
    resonance_freq: float
    resonance_decay: float
    amplitude_modulated_by_shaft: bool = False
    severity_jitter: float = 0.0

    def __post_init__(self):
        if self.fault_kind not in (OUTER_RING, INNER_RING):
            raise ConfigError(f"unknown fault kind: {self.fault_kind!r}")
        if self.fault_freq_ratio <= 0:
            raise ConfigError("fault_freq_ratio must be positive")
        if self.resonance_decay <= 0:
            raise ConfigError("resonance_decay must be positive")
        if not (0.0 <= self.severity_jitter < 1.0):
            raise ConfigError("severity_jitter must be in [0, 1)")


@dataclass(frozen=True)
class SynthConfig:
    """Full parameterization of one synthetic channel."""

    fs: float = 25600.0
    duration: float = 10.0
    seed: int = 0
    rotational_freq_profile: tuple = ((0.0, 43.0),)
    harmonic_amplitudes: tuple = ((1, 1.0),)
    noise_level: float = 0.0
    fault: FaultSpec | None = None

    def __post_init__(self):
        if self.fs <= 0:
            raise ConfigError("fs must be positive")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        profile = tuple((float(t), float(f)) for t, f in self.rotational_freq_profile)
        if not profile:
            raise ConfigError("rotational_freq_profile must not be empty")
        times = [t for t, _ in profile]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("profile breakpoint times must be strictly increasing")
        if any(f <= 0 for _, f in profile):
            raise ConfigError("rotational frequency must stay positive")
        object.__setattr__(self, "rotational_freq_profile", profile)
        harmonics = tuple((int(h), float(a)) for h, a in self.harmonic_amplitudes)
        if any(a < 0 for _, a in harmonics):
            raise ConfigError("harmonic amplitudes must be non-negative")
        object.__setattr__(self, "harmonic_amplitudes", harmonics)
        if self.noise_level < 0:
            raise ConfigError("noise_level must be non-negative")
        if self.fault is not None and self.fault.resonance_freq >= self.fs / 2:
            raise ConfigError("resonance_freq must be below fs/2")


@dataclass
class AudioRecording:
    """Sampled waveform with its sample rate, channel identity, and the
    per-block mean rotational frequency track (one value per FRAME_SAMPLES)."""

    samples: np.ndarray
    fs: float
    channel_id: str
    rotational_freq_track: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.rotational_freq_track = np.asarray(self.rotational_freq_track, dtype=float)
        if not np.all(np.isfinite(self.samples)):
            raise DataError(f"{self.channel_id}: non-finite samples")
        expected = len(self.samples) // FRAME_SAMPLES
        if len(self.rotational_freq_track) != expected:
            raise DataError(
                f"{self.channel_id}: track has {len(self.rotational_freq_track)} "
                f"entries, expected {expected}"
            )


def sample_profile(profile, t: np.ndarray) -> np.ndarray:
    """Piecewise-linear rotational frequency at times t (clamped at the ends)."""
    times = np.array([p[0] for p in profile])
    freqs = np.array([p[1] for p in profile])
    return np.interp(t, times, freqs)


def resonance_kernel(resonance_freq: float, resonance_decay: float, fs: float) -> np.ndarray:
    """Impulse response of the excited resonance, truncated at -80 dB."""
    length = int(np.ceil(fs * np.log(1e4) / resonance_decay))
    k = np.arange(length)
    return np.exp(-resonance_decay * k / fs) * np.sin(2.0 * np.pi * resonance_freq * k / fs)


def _shaft_revolutions(config: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sampled rotational frequency and its running integral (revolutions)."""
    n = int(round(config.duration * config.fs))
    t = np.arange(n) / config.fs
    freq = sample_profile(config.rotational_freq_profile, t)
    revs = np.cumsum(freq) / config.fs
    return freq, revs


# Impact strength drifts between contact regimes on a seconds scale: it holds
# a level for _SEVERITY_BLOCK_S, usually in a strong regime, and occasionally
# (probability _QUIET_SPELL_PROB per block) drops to its weakest level, the
# way an incipient defect goes quiet when it leaves the load path.
_SEVERITY_BLOCK_S = 2.0
_QUIET_SPELL_PROB = 0.1
_STRONG_REGIME_LOW = -0.3


def _fault_impulses(config: SynthConfig, freq: np.ndarray, revs: np.ndarray,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample indices and amplitudes of the impact train.

    severity_jitter scales every randomization: per-impact timing, the
    per-impact amplitude scatter, and the depth of the slow regime drift.
    """
    fault = config.fault
    fault_revs = fault.fault_freq_ratio * revs
    indices = np.flatnonzero(np.diff(np.floor(fault_revs)) > 0) + 1
    if indices.size == 0:
        return indices, np.zeros(0)
    n = len(revs)
    jitter = fault.severity_jitter
    if jitter > 0:
        period = config.fs / (fault.fault_freq_ratio * freq[indices])
        shift = np.rint(jitter * period
                        * rng.uniform(-1.0, 1.0, size=indices.size)).astype(int)
        indices = np.clip(indices + shift, 0, n - 1)
    amps = np.full(indices.size, fault.impulse_amplitude)
    if jitter > 0:
        num_blocks = int(np.ceil(config.duration / _SEVERITY_BLOCK_S)) + 1
        quiet = rng.uniform(size=num_blocks) < _QUIET_SPELL_PROB
        levels = rng.uniform(_STRONG_REGIME_LOW, 1.0, size=num_blocks)
        levels[quiet] = -1.0
        block_of = np.minimum((indices / (config.fs * _SEVERITY_BLOCK_S)).astype(int),
                              num_blocks - 1)
        amps *= 1.0 + jitter * levels[block_of]
        amps *= 1.0 + (jitter / 3.0) * rng.uniform(-1.0, 1.0, size=indices.size)
    if fault.amplitude_modulated_by_shaft:
        amps *= 1.0 + np.cos(2.0 * np.pi * revs[indices])
    return indices, amps


def fault_impulse_indices(config: SynthConfig) -> np.ndarray:
    """Impact sample positions the generator will use for this config."""
    if config.fault is None:
        return np.zeros(0, dtype=int)
    freq, revs = _shaft_revolutions(config)
    rng = _child_rngs(config.seed)[2]
    indices, _ = _fault_impulses(config, freq, revs, rng)
    return indices


def _child_rngs(seed: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(3)
    return [np.random.default_rng(c) for c in children]


def synth_recording(config: SynthConfig, channel_id: str = "synth") -> AudioRecording:
    """Generate one channel; deterministic given config (including seed)."""
    rng_phase, rng_noise, rng_fault = _child_rngs(config.seed)
    freq, revs = _shaft_revolutions(config)
    n = len(revs)

    signal = np.zeros(n)
    for h, amp in config.harmonic_amplitudes:
        phase = rng_phase.uniform(0.0, 2.0 * np.pi)
        if amp > 0:
            signal += amp * np.sin(2.0 * np.pi * h * revs + phase)

    if config.noise_level > 0:
        signal += config.noise_level * rng_noise.standard_normal(n)

    if config.fault is not None:
        indices, amps = _fault_impulses(config, freq, revs, rng_fault)
        kernel = resonance_kernel(config.fault.resonance_freq,
                                  config.fault.resonance_decay, config.fs)
        for idx, amp in zip(indices, amps):
            stop = min(idx + len(kernel), n)
            signal[idx:stop] += amp * kernel[: stop - idx]

    num_blocks = n // FRAME_SAMPLES
    track = freq[: num_blocks * FRAME_SAMPLES].reshape(num_blocks, FRAME_SAMPLES).mean(axis=1)
    return AudioRecording(samples=signal, fs=config.fs, channel_id=channel_id,
                          rotational_freq_track=track)


# --- campaign scenarios ----------------------------------------------------

LABEL_HEALTHY = "H"
LABEL_DAMAGED = "D"


@dataclass(frozen=True)
class ChannelSpec:
    """One channel of a measurement campaign: identity, metadata, generator."""

    channel_id: str
    label: str
    axle: str
    component: str
    description: str
    config: SynthConfig

    def __post_init__(self):
        if self.label not in (LABEL_HEALTHY, LABEL_DAMAGED):
            raise ConfigError(f"label must be H or D, got {self.label!r}")
        if self.component not in ("motor", "gearbox"):
            raise ConfigError(f"component must be motor or gearbox, got {self.component!r}")


_BASE_HARMONICS = ((1, 1.00), (2, 0.55), (3, 0.40), (4, 0.28),
                   (5, 0.20), (6, 0.14), (7, 0.10), (8, 0.07))
_NOISE_LEVEL = 0.35

# (channel, label, axle, component, description, fault kind or None,
#  fault ratio, impact-to-harmonic power in dB, resonance Hz, decay 1/s,
#  severity jitter)
_DEFAULT_CHANNELS = (
    ("A1_b1", "D", "A1", "motor", "inner ring pitting, very early stage",
     INNER_RING, 5.4, -8.0, 4300.0, 900.0, 0.75),
    ("A2_b2", "D", "A2", "motor", "outer ring fatigue, developed stage",
     OUTER_RING, 3.5, -4.0, 4000.0, 900.0, 0.1),
    ("A2_b3", "D", "A2", "gearbox", "outer ring fatigue, developed stage",
     OUTER_RING, 3.5, 0.0, 3000.0, 700.0, 0.1),
    ("B1_b1", "H", "B1", "motor", "healthy reference", None, 0, 0, 0, 0, 0),
    ("B2_b2", "H", "B2", "motor", "healthy reference", None, 0, 0, 0, 0, 0),
    ("B2_b3", "H", "B2", "gearbox", "healthy reference", None, 0, 0, 0, 0, 0),
)


def _default_profile(duration: float, index: int) -> tuple:
    """Mostly constant shaft speed inside 42-45 Hz with one deceleration dip.

    The dip leaves the gating band, so every recording contributes both kept
    and rejected frames.
    """
    hold_a = 43.0 + 0.12 * index
    hold_b = 44.2 - 0.10 * index
    t1 = 0.56 * duration
    t2 = t1 + 0.04 * duration
    t3 = t2 + 0.06 * duration
    t4 = t3 + 0.04 * duration
    return ((0.0, hold_a), (t1, hold_a), (t2, 33.0), (t3, 33.0), (t4, hold_b))


def _channel_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


def impulse_amplitude_for_power(power_db: float, harmonics, profile,
                                fault_kind: str, fault_freq_ratio: float,
                                resonance_freq: float, resonance_decay: float,
                                fs: float, duration: float) -> float:
    """Impact amplitude that puts the train's mean power at power_db relative
    to the harmonic component."""
    harmonic_ms = 0.5 * sum(a * a for _, a in harmonics)
    t = np.linspace(0.0, duration, 512)
    mean_fr = float(np.mean(sample_profile(profile, t)))
    kernel = resonance_kernel(resonance_freq, resonance_decay, fs)
    kernel_energy = float(np.sum(kernel**2))
    rate = fault_freq_ratio * mean_fr
    modulation_ms = 1.5 if fault_kind == INNER_RING else 1.0
    target_ms = harmonic_ms * 10.0 ** (power_db / 10.0)
    return float(np.sqrt(target_ms * fs / (rate * kernel_energy * modulation_ms)))


def default_scenario(seed: int, duration: float = 600.0,
                     fs: float = 25600.0) -> list[ChannelSpec]:
    """Six-channel campaign: three damaged bearings (inner-ring motor,
    outer-ring motor, outer-ring gearbox) and their healthy references."""
    channels = []
    for index, row in enumerate(_DEFAULT_CHANNELS):
        (channel_id, label, axle, component, description,
         kind, ratio, db, res_f, decay, jitter) = row
        channel_rng = np.random.default_rng(np.random.SeedSequence([seed, 977, index]))
        harmonics = tuple(
            (h, a * channel_rng.uniform(0.97, 1.03)) for h, a in _BASE_HARMONICS
        )
        profile = _default_profile(duration, index)
        fault = None
        if kind is not None:
            amplitude = impulse_amplitude_for_power(
                db, harmonics, profile, kind, ratio, res_f, decay, fs, duration)
            fault = FaultSpec(
                fault_kind=kind,
                fault_freq_ratio=ratio,
                impulse_amplitude=amplitude,
                resonance_freq=res_f,
                resonance_decay=decay,
                amplitude_modulated_by_shaft=(kind == INNER_RING),
                severity_jitter=jitter,
            )
        config = SynthConfig(
            fs=fs,
            duration=duration,
            seed=_channel_seed(seed, index),
            rotational_freq_profile=profile,
            harmonic_amplitudes=harmonics,
            noise_level=_NOISE_LEVEL,
            fault=fault,
        )
        channels.append(ChannelSpec(channel_id, label, axle, component,
                                    description, config))
    return channels


def scenario_from_json(path) -> list[ChannelSpec]:
    """Load a campaign description from a JSON file.

    The file holds a list of channel objects with keys: channel, label, axle,
    component, description, seed, fs, duration, profile ([[t, hz], ...]),
    harmonics ([[h, amp], ...]), noise_level, and fault (null or an object
    with kind, freq_ratio, amplitude, resonance_freq, resonance_decay,
    modulated, jitter).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"scenario file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, list):
        raise DataError(f"{path}: expected a JSON list of channels")
    channels = []
    for entry in raw:
        try:
            fault = None
            if entry.get("fault"):
                f = entry["fault"]
                fault = FaultSpec(
                    fault_kind=f["kind"],
                    fault_freq_ratio=float(f["freq_ratio"]),
                    impulse_amplitude=float(f["amplitude"]),
                    resonance_freq=float(f["resonance_freq"]),
                    resonance_decay=float(f["resonance_decay"]),
                    amplitude_modulated_by_shaft=bool(f.get("modulated", False)),
                    severity_jitter=float(f.get("jitter", 0.0)),
                )
            config = SynthConfig(
                fs=float(entry.get("fs", 25600.0)),
                duration=float(entry["duration"]),
                seed=int(entry["seed"]),
                rotational_freq_profile=tuple(
                    (float(t), float(f)) for t, f in entry["profile"]),
                harmonic_amplitudes=tuple(
                    (int(h), float(a)) for h, a in entry.get("harmonics", [[1, 1.0]])),
                noise_level=float(entry.get("noise_level", 0.0)),
                fault=fault,
            )
            channels.append(ChannelSpec(
                channel_id=str(entry["channel"]),
                label=str(entry["label"]),
                axle=str(entry.get("axle", "")),
                component=str(entry.get("component", "motor")),
                description=str(entry.get("description", "")),
                config=config,
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad channel entry ({exc})") from exc
    return channels


def synth_campaign(scenario: list[ChannelSpec]) -> dict[str, AudioRecording]:
    """Generate every channel of a scenario; raises on duplicate channel ids."""
    recordings: dict[str, AudioRecording] = {}
    for spec in scenario:
        if spec.channel_id in recordings:
            raise DataError(f"duplicate channel id: {spec.channel_id}")
        recordings[spec.channel_id] = synth_recording(spec.config, spec.channel_id)
    return recordings
