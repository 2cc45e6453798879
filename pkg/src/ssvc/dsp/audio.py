"""Audio containers and file I/O (PCM-16 WAV and raw float32)."""

from __future__ import annotations

import struct
import wave
from dataclasses import dataclass, field

import numpy as np

DEFAULT_SAMPLE_RATE = 24_000


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"audio must be mono 1-d, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("audio contains non-finite samples")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


def write_wav(path, audio: AudioBuffer) -> None:
    """PCM-16 mono WAV; samples are clipped to [-1, 1] before quantizing."""
    clipped = np.clip(audio.samples, -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(audio.sample_rate)
        w.writeframes(pcm.tobytes())


def read_wav(path) -> AudioBuffer:
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise ValueError(f"expected mono WAV, got {w.getnchannels()} channels")
        if w.getsampwidth() != 2:
            raise ValueError(f"expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0
    return AudioBuffer(samples, rate)


# Raw float32 layout: magic "RF32", sample rate u32 LE, sample count u32 LE,
# then count little-endian float32 values.

_RAW_MAGIC = b"RF32"


def write_raw_f32(path, audio: AudioBuffer) -> None:
    with open(path, "wb") as f:
        f.write(_RAW_MAGIC)
        f.write(struct.pack("<II", audio.sample_rate, audio.samples.size))
        f.write(audio.samples.astype("<f4").tobytes())


def read_raw_f32(path) -> AudioBuffer:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _RAW_MAGIC:
            raise ValueError(f"bad raw-audio magic {magic!r}, expected {_RAW_MAGIC!r}")
        rate, count = struct.unpack("<II", f.read(8))
        raw = f.read(4 * count)
        if len(raw) != 4 * count:
            raise ValueError(f"truncated raw audio: expected {count} samples, file ran out")
    return AudioBuffer(np.frombuffer(raw, dtype="<f4").astype(np.float64), rate)
