"""Mel analysis: frame geometry, filterbank placement, cepstra."""

import numpy as np
import pytest

from ssvc.autodiff import Rng
from ssvc.dsp import (
    LOG_FLOOR,
    AudioBuffer,
    MelConfig,
    MelSpectrogram,
    filter_center_freqs,
    frame_count,
    hz_to_mel,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    mfcc,
)

from oracles import dct2_loops

SR = 24_000


def tone(freq, seconds=1.0, sr=SR, amp=0.5):
    t = np.arange(int(seconds * sr)) / sr
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), sr)


def test_mel_scale_formula():
    assert np.isclose(hz_to_mel(700.0), 2595.0 * np.log10(2.0))
    assert np.isclose(mel_to_hz(hz_to_mel(1234.5)), 1234.5)
    assert hz_to_mel(0.0) == 0.0


def test_one_second_gives_77_frames_of_80_bins():
    mel = mel_spectrogram(tone(440.0, 1.0))
    assert mel.frames.shape == (77, 80)


def test_frame_count_formula_on_random_lengths():
    rng = Rng(60)
    frame, hop = 1200, 300
    for n in (1200 + rng.uniform(100) * 50_000).astype(np.int64):
        n = int(n)
        assert frame_count(n, frame, hop) == 1 + (n - frame) // hop


def test_silence_hits_the_log_floor():
    mel = mel_spectrogram(AudioBuffer(np.zeros(SR // 2), SR))
    assert np.allclose(mel.frames, np.log(LOG_FLOOR))


def test_tone_peak_lands_in_the_right_filter():
    cfg = MelConfig()
    centers = filter_center_freqs(cfg)
    for freq in [250.0, 1000.0, 4000.0]:
        mel = mel_spectrogram(tone(freq), cfg)
        peak_bin = int(np.argmax(mel.frames.mean(axis=0)))
        # within one filter's width of the true frequency
        widths = np.diff(centers)
        half_width = widths[min(peak_bin, len(widths) - 1)]
        assert abs(centers[peak_bin] - freq) < half_width, (freq, centers[peak_bin])


def test_filterbank_rows_cover_their_corners_only():
    cfg = MelConfig(n_mels=10)
    fb = mel_filterbank(cfg, SR)
    assert fb.shape == (10, 1025)
    assert np.all(fb >= 0)
    assert np.all(fb.max(axis=1) > 0)
    freqs = np.arange(1025) * SR / 2048
    outside = (freqs < cfg.fmin) | (freqs > cfg.fmax)
    assert np.allclose(fb[:, outside], 0.0)


def test_short_audio_is_an_error():
    with pytest.raises(ValueError, match="shorter than one"):
        mel_spectrogram(AudioBuffer(np.zeros(1199), SR))


def test_bad_configs_are_rejected():
    with pytest.raises(ValueError, match="fft_size"):
        mel_spectrogram(tone(100), MelConfig(fft_size=1024))
    with pytest.raises(ValueError, match="Nyquist"):
        mel_spectrogram(tone(100), MelConfig(fmax=13_000))
    with pytest.raises(ValueError, match="fmin"):
        mel_spectrogram(tone(100), MelConfig(fmin=500, fmax=400))


def test_mfcc_of_constant_spectrum_is_zero():
    cfg = MelConfig()
    frames = np.full((4, 80), 2.5)
    out = mfcc(MelSpectrogram(frames, cfg, SR))
    assert out.shape == (4, 13)
    assert np.allclose(out, 0.0, atol=1e-9)


def test_mfcc_picks_out_a_single_cosine_mode():
    n = 80
    frames = np.cos(np.pi / n * (np.arange(n) + 0.5) * 1.0)[None, :]
    out = mfcc(MelSpectrogram(frames, MelConfig(), SR))
    assert abs(out[0, 0]) > 1.0          # c1 carries the signal
    assert np.max(np.abs(out[0, 1:])) < 1e-9


def test_mfcc_matches_direct_summation_dct():
    rng = Rng(61)
    frames = rng.normal((7, 80))
    got = mfcc(MelSpectrogram(frames, MelConfig(), SR))
    want = dct2_loops(frames)[:, 1:14]
    assert np.max(np.abs(got - want)) < 1e-8


def test_mel_frames_all_finite_on_noise():
    rng = Rng(62)
    audio = AudioBuffer(rng.normal(SR) * 0.1, SR)
    mel = mel_spectrogram(audio)
    assert np.all(np.isfinite(mel.frames))
