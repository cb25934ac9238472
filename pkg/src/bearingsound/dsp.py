"""Cepstral feature extraction for airborne machine sound.

The chain is: window a fixed-length frame, take the squared-magnitude DFT on
bins 0..N/2, weight the bins with a triangular Mel filterbank, and transform
the log filter energies with a cosine sum into cepstral coefficients.

All functions are pure; nothing here holds mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

MEL_SCALE_FACTOR = 2595.0
MEL_BREAK_HZ = 700.0


def hz_to_mel(f):
    """Warp frequency in Hz onto the Mel scale."""
    return MEL_SCALE_FACTOR * np.log10(1.0 + np.asarray(f, dtype=float) / MEL_BREAK_HZ)


def mel_to_hz(m):
    """Inverse of hz_to_mel."""
    return MEL_BREAK_HZ * (10.0 ** (np.asarray(m, dtype=float) / MEL_SCALE_FACTOR) - 1.0)


@dataclass(frozen=True)
class MfccConfig:
    """Parameters of the feature front end.

    dft_size is the frame length in samples and must be a power of two.
    num_channels is the Mel filter count, num_coeffs the number of cepstral
    coefficients kept (c1..c_num_coeffs; there is no c0 term).
    """

    dft_size: int = 2048
    num_channels: int = 26
    sample_rate: float = 25600.0
    freq_low: float = 0.0
    freq_high: float | None = None
    num_coeffs: int = 13
    window_kind: str = "hann"
    log_floor: float = 1e-10

    def __post_init__(self):
        n = self.dft_size
        if n < 2 or (n & (n - 1)) != 0:
            raise ConfigError(f"dft_size must be a power of two >= 2, got {n}")
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.freq_high is None:
            object.__setattr__(self, "freq_high", self.sample_rate / 2.0)
        if not (0.0 <= self.freq_low < self.freq_high <= self.sample_rate / 2.0):
            raise ConfigError(
                f"need 0 <= freq_low < freq_high <= fs/2, got "
                f"[{self.freq_low}, {self.freq_high}] at fs={self.sample_rate}"
            )
        if not (1 <= self.num_coeffs <= self.num_channels <= n // 2):
            raise ConfigError(
                f"need 1 <= num_coeffs <= num_channels <= dft_size/2, got "
                f"num_coeffs={self.num_coeffs}, num_channels={self.num_channels}, "
                f"dft_size={n}"
            )
        if self.window_kind not in ("rectangular", "hann"):
            raise ConfigError(f"unknown window kind: {self.window_kind!r}")
        if self.log_floor <= 0:
            raise ConfigError(f"log_floor must be positive, got {self.log_floor}")


def window_samples(kind: str, n: int) -> np.ndarray:
    """Window of length n, values in [0, 1].

    "rectangular" is all ones; "hann" is the symmetric raised cosine with
    zero endpoints.
    """
    if kind == "rectangular":
        return np.ones(n)
    if kind == "hann":
        k = np.arange(n)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))
    raise ConfigError(f"unknown window kind: {kind!r}")


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular filters over the one-sided spectrum.

    weights has shape (num_channels, dft_size//2 + 1). Row i is zero outside
    its triangle and reaches exactly 1.0 at its center bin, which is the zero
    of rows i-1 and i+1. center_freqs holds the analytic (unsnapped) center
    frequencies in Hz, strictly increasing.
    """

    weights: np.ndarray
    center_freqs: np.ndarray

    @property
    def num_channels(self) -> int:
        return self.weights.shape[0]


def build_filterbank(config: MfccConfig) -> MelFilterbank:
    """Construct the Mel filterbank for a config.

    Centers sit at num_channels + 2 equidistant points on the Mel scale
    between freq_low and freq_high; each triangle rises from the previous
    center bin to 1.0 at its own and falls to zero at the next. Raises
    ConfigError when the Mel points collapse onto non-distinct DFT bins,
    i.e. when fs/dft_size is too coarse for the requested channel count.
    """
    n = config.dft_size
    k = config.num_channels
    mel_points = np.linspace(
        hz_to_mel(config.freq_low), hz_to_mel(config.freq_high), k + 2
    )
    hz_points = mel_to_hz(mel_points)
    bins = np.floor((n + 1) * hz_points / config.sample_rate).astype(int)
    bins = np.minimum(bins, n // 2)
    if np.any(np.diff(bins) < 1):
        raise ConfigError(
            f"{k} Mel channels do not fit between {config.freq_low} and "
            f"{config.freq_high} Hz at a bin width of {config.sample_rate / n:.3f} Hz"
        )

    weights = np.zeros((k, n // 2 + 1))
    for i in range(k):
        left, center, right = bins[i], bins[i + 1], bins[i + 2]
        up = np.arange(left, center)
        weights[i, up] = (up - left) / (center - left)
        down = np.arange(center, right)
        weights[i, down] = (right - down) / (right - center)
    return MelFilterbank(weights=weights, center_freqs=hz_points[1:-1])


def _bit_reversed_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def fft_radix2(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 transform along the last axis.

    The last axis length must be a power of two. Accepts real or complex
    input of any leading shape and returns complex output of the same shape.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"transform length must be a power of two, got {n}")
    y = x[..., _bit_reversed_indices(n)].astype(np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = y.reshape(y.shape[:-1] + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        blocks[..., :half], blocks[..., half:] = even + odd, even - odd
        size *= 2
    return y


def power_spectrum(frame: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Squared-magnitude DFT of a windowed frame on bins 0..N/2.

    No 1/N scaling is applied, so a rectangular-windowed unit tone at an
    exact bin lands (N/2)^2 there. frame and window must have equal
    power-of-two length.
    """
    frame = np.asarray(frame, dtype=float)
    window = np.asarray(window, dtype=float)
    if frame.shape[-1] != window.shape[0]:
        raise ValueError(
            f"frame length {frame.shape[-1]} != window length {window.shape[0]}"
        )
    n = window.shape[0]
    spectrum = fft_radix2(frame * window)[..., : n // 2 + 1]
    return np.abs(spectrum) ** 2


def filterbank_energies(spectrum: np.ndarray, fb: MelFilterbank) -> np.ndarray:
    """Per-channel energies: weighted sums of power-spectrum bins."""
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.shape[-1] != fb.weights.shape[1]:
        raise ValueError(
            f"spectrum has {spectrum.shape[-1]} bins, filterbank expects "
            f"{fb.weights.shape[1]}"
        )
    return spectrum @ fb.weights.T


@dataclass(frozen=True)
class FeatureVector:
    """Cepstral coefficients c1..c_num_coeffs for one frame."""

    coeffs: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))


def cepstral_basis(num_channels: int, num_coeffs: int) -> np.ndarray:
    """Cosine basis B[mu-1, i-1] = cos(pi*(2i-1)*mu / (2K)) for mu=1..num_coeffs."""
    mu = np.arange(1, num_coeffs + 1)[:, None]
    i = np.arange(1, num_channels + 1)[None, :]
    return np.cos(np.pi * (2 * i - 1) * mu / (2 * num_channels))


def mfcc(energies: np.ndarray, config: MfccConfig) -> FeatureVector:
    """Cosine transform of the log filter energies.

    c_mu = sum_i log(max(X_i, log_floor)) * cos(pi*(2i-1)*mu / (2K)) for
    mu = 1..num_coeffs. The sum is unscaled and natural-log based; the floor
    keeps silent frames finite.
    """
    energies = np.asarray(energies, dtype=float)
    if energies.shape[-1] != config.num_channels:
        raise ValueError(
            f"got {energies.shape[-1]} energies for {config.num_channels} channels"
        )
    log_e = np.log(np.maximum(energies, config.log_floor))
    basis = cepstral_basis(config.num_channels, config.num_coeffs)
    return FeatureVector(coeffs=log_e @ basis.T)


def feature_matrix(samples: np.ndarray, config: MfccConfig,
                   fb: MelFilterbank | None = None) -> np.ndarray:
    """Feature vectors for every complete non-overlapping frame, as rows.

    Trailing samples that do not fill a frame are dropped. Returns an array
    of shape (num_frames, num_coeffs).
    """
    samples = np.asarray(samples, dtype=float)
    n = config.dft_size
    num_frames = len(samples) // n
    if num_frames == 0:
        return np.zeros((0, config.num_coeffs))
    if fb is None:
        fb = build_filterbank(config)
    window = window_samples(config.window_kind, n)
    basis = cepstral_basis(config.num_channels, config.num_coeffs)
    frames = samples[: num_frames * n].reshape(num_frames, n)
    out = np.zeros((num_frames, config.num_coeffs))
    # Chunked so a long recording never materializes a huge complex array.
    chunk = max(1, (1 << 22) // n)
    for start in range(0, num_frames, chunk):
        block = frames[start : start + chunk]
        spectra = power_spectrum(block, window)
        energies = filterbank_energies(spectra, fb)
        out[start : start + chunk] = (
            np.log(np.maximum(energies, config.log_floor)) @ basis.T
        )
    return out


def extract_features(recording, config: MfccConfig) -> list[FeatureVector]:
    """Features for each complete frame of a recording, in temporal order.

    The recording's sample rate must match the config; a mismatch means the
    dataset and the feature config disagree and is reported as such.
    """
    from .errors import DataError

    if float(recording.fs) != float(config.sample_rate):
        raise DataError(
            f"recording sample rate {recording.fs} Hz does not match "
            f"config sample rate {config.sample_rate} Hz"
        )
    rows = feature_matrix(recording.samples, config)
    return [FeatureVector(coeffs=row) for row in rows]
