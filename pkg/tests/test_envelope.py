"""Mel-domain prosody measurements on constructed signals."""

import numpy as np

from ssvc.autodiff import Rng
from ssvc.dsp import (
    AudioBuffer,
    MelConfig,
    count_syllables,
    f0_track_from_mel,
    f0_variation_from_mel,
    loudness_envelope,
    mel_spectrogram,
    syllable_rate_from_mel,
)

SR = 24_000


def _pulsed_audio(n_bursts, burst_s=0.12, gap_s=0.08, freq=180.0):
    """Harmonic bursts separated by near-silence, one burst per syllable."""
    rng = Rng(100 + n_bursts)
    pieces = []
    t_burst = np.arange(int(burst_s * SR)) / SR
    ramp = np.minimum(1.0, np.minimum(t_burst, burst_s - t_burst) / 0.02)
    for _ in range(n_bursts):
        tone = np.zeros_like(t_burst)
        for h in (1, 2, 3, 4):
            tone += np.sin(2 * np.pi * freq * h * t_burst) / h
        pieces.append(0.3 * ramp * tone)
        pieces.append(0.0003 * rng.normal(int(gap_s * SR)))
    return AudioBuffer(np.concatenate(pieces), SR)


def test_counts_bursts_as_syllables():
    for n in (3, 5, 8):
        mel = mel_spectrogram(_pulsed_audio(n))
        assert count_syllables(mel.frames) == n


def test_rate_matches_construction():
    n = 6
    audio = _pulsed_audio(n)
    mel = mel_spectrogram(audio)
    got = syllable_rate_from_mel(mel.frames)
    planned = n / audio.duration_s
    assert abs(got - planned) / planned < 0.12


def test_silence_counts_zero():
    frames = np.full((60, 80), np.log(1e-10))
    assert count_syllables(frames) == 0


def test_envelope_tracks_energy():
    loud = np.zeros((10, 80))
    quiet = np.full((10, 80), -20.0)
    env = loudness_envelope(np.concatenate([quiet, loud, quiet]))
    assert env[10:20].min() > env[:10].max()


def test_f0_track_recovers_harmonic_tone():
    t = np.arange(SR) / SR
    sig = sum(np.sin(2 * np.pi * 200.0 * h * t) / h for h in (1, 2, 3, 4, 5))
    mel = mel_spectrogram(AudioBuffer(0.2 * sig, SR))
    track = f0_track_from_mel(mel.frames)
    voiced = track[track > 0]
    assert voiced.size > 0.8 * track.size
    # mel-bin resolution is coarse; within 8% is what this detector is for
    assert np.median(np.abs(voiced - 200.0)) / 200.0 < 0.08


def test_f0_variation_separates_flat_from_wide():
    t = np.arange(2 * SR) / SR
    flat = sum(np.sin(2 * np.pi * 200.0 * h * t) / h for h in (1, 2, 3, 4))
    phase = 2 * np.pi * (200.0 * t + 40.0 * 3.0 * np.sin(2 * np.pi * t / 2.0) / (2 * np.pi / 2.0))
    wide = sum(np.sin(phase * h) / h for h in (1, 2, 3, 4))
    std_flat = f0_variation_from_mel(mel_spectrogram(AudioBuffer(0.2 * flat, SR)).frames)
    std_wide = f0_variation_from_mel(mel_spectrogram(AudioBuffer(0.2 * wide, SR)).frames)
    assert std_wide > std_flat + 5.0


def test_config_plumbs_through():
    frames = np.full((40, 40), np.log(1e-10))
    cfg = MelConfig(n_mels=40)
    assert f0_variation_from_mel(frames, cfg) == 0.0
