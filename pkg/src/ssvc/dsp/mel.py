"""Log-mel spectrograms and mel-cepstral coefficients.

Frames are Hann-windowed, zero-padded to the FFT size, and reduced to
mel energies through a triangular filterbank on the HTK mel scale
(mel = 2595 * log10(1 + f/700)).  Energies go through a natural log
with a 1e-10 floor so silence stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .audio import AudioBuffer

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class MelConfig:
    frame_ms: float = 50.0
    hop_ms: float = 12.5
    fft_size: int = 2048
    n_mels: int = 80
    fmin: float = 80.0
    fmax: float = 12_000.0

    def frame_len(self, sample_rate: int) -> int:
        return int(round(self.frame_ms * sample_rate / 1000.0))

    def hop_len(self, sample_rate: int) -> int:
        return int(round(self.hop_ms * sample_rate / 1000.0))

    def validate(self, sample_rate: int) -> None:
        if self.fft_size < self.frame_len(sample_rate):
            raise ValueError(
                f"fft_size {self.fft_size} shorter than the "
                f"{self.frame_len(sample_rate)}-sample frame"
            )
        if not (0 <= self.fmin < self.fmax <= sample_rate / 2):
            raise ValueError(
                f"need 0 <= fmin < fmax <= Nyquist, got fmin={self.fmin}, "
                f"fmax={self.fmax}, sample_rate={sample_rate}"
            )


@dataclass
class MelSpectrogram:
    frames: np.ndarray  # (T, n_mels) log energies
    config: MelConfig
    sample_rate: int = 24_000

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig, sample_rate: int) -> np.ndarray:
    """Triangular filters as an (n_mels, fft_size//2 + 1) matrix."""
    n_bins = cfg.fft_size // 2 + 1
    fft_freqs = np.arange(n_bins) * sample_rate / cfg.fft_size
    corners = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2))
    fb = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lo, center, hi = corners[m], corners[m + 1], corners[m + 2]
        rising = (fft_freqs - lo) / (center - lo)
        falling = (hi - fft_freqs) / (hi - center)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def filter_center_freqs(cfg: MelConfig) -> np.ndarray:
    corners = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax), cfg.n_mels + 2))
    return corners[1:-1]


def frame_count(n_samples: int, frame_len: int, hop_len: int) -> int:
    if n_samples < frame_len:
        raise ValueError(f"audio of {n_samples} samples is shorter than one {frame_len}-sample frame")
    return 1 + (n_samples - frame_len) // hop_len


def mel_spectrogram(audio: AudioBuffer, cfg: MelConfig = MelConfig()) -> MelSpectrogram:
    cfg.validate(audio.sample_rate)
    frame_len = cfg.frame_len(audio.sample_rate)
    hop_len = cfg.hop_len(audio.sample_rate)
    n_frames = frame_count(audio.samples.size, frame_len, hop_len)

    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(frame_len) / frame_len)
    starts = hop_len * np.arange(n_frames)
    frames = audio.samples[starts[:, None] + np.arange(frame_len)] * window
    spectrum = np.abs(np.fft.rfft(frames, n=cfg.fft_size, axis=1)) ** 2
    energies = spectrum @ mel_filterbank(cfg, audio.sample_rate).T
    return MelSpectrogram(np.log(energies + LOG_FLOOR), cfg, audio.sample_rate)


def mfcc(mel: MelSpectrogram, n_coeffs: int = 13) -> np.ndarray:
    """Cepstral coefficients 1..n_coeffs per frame; the 0th is dropped."""
    if mel.frames.shape[0] < 1:
        raise ValueError("need at least one frame")
    coeffs = scipy.fft.dct(mel.frames, type=2, axis=1)
    return coeffs[:, 1: n_coeffs + 1]
