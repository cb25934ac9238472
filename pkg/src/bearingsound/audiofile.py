"""Single-channel 16-bit PCM WAV files plus the rotational-track sidecar.

The sidecar is a plain text file next to the WAV (same stem, ``.rot``
extension) holding one ASCII float per frame-sized block: the mean shaft
rotational frequency of that block in Hz.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .errors import DataError

PCM_FULL_SCALE = 32767


def write_wav(path, samples: np.ndarray, fs: float) -> None:
    """Write samples as mono 16-bit little-endian PCM.

    Floating-point input is scaled so the peak sits at 95% of full scale;
    a silent signal is written as zeros.
    """
    samples = np.asarray(samples, dtype=float)
    peak = np.max(np.abs(samples)) if samples.size else 0.0
    if peak > 0:
        scaled = samples * (0.95 * PCM_FULL_SCALE / peak)
    else:
        scaled = samples
    pcm = np.rint(scaled).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(round(fs)))
        w.writeframes(pcm.tobytes())


def read_wav(path) -> tuple[np.ndarray, float]:
    """Read a mono 16-bit PCM WAV; returns (float samples in [-1, 1], fs)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"audio file not found: {path}")
    try:
        with wave.open(str(path), "rb") as w:
            if w.getsampwidth() != 2:
                raise DataError(f"{path}: expected 16-bit PCM, got "
                                f"{8 * w.getsampwidth()}-bit")
            if w.getnchannels() != 1:
                raise DataError(f"{path}: expected mono, got "
                                f"{w.getnchannels()} channels")
            fs = float(w.getframerate())
            raw = w.readframes(w.getnframes())
    except wave.Error as exc:
        raise DataError(f"{path}: not a readable WAV file ({exc})") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(float) / PCM_FULL_SCALE
    return samples, fs


def sidecar_path(wav_path) -> Path:
    return Path(wav_path).with_suffix(".rot")


def write_rot_track(wav_path, track: np.ndarray) -> None:
    lines = "".join(f"{float(v)!r}\n" for v in np.asarray(track, dtype=float))
    sidecar_path(wav_path).write_text(lines, encoding="utf-8")


def read_rot_track(wav_path) -> np.ndarray:
    path = sidecar_path(wav_path)
    if not path.exists():
        raise DataError(f"rotational track sidecar not found: {path}")
    values = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise DataError(f"{path}:{line_no}: bad float {line!r}") from exc
    return np.asarray(values, dtype=float)
