"""Additive-synthesis renderer for corpus utterances.

Each token becomes one syllable: a harmonic source whose fundamental
follows base F0 (per speaker) plus a class-shaped contour and vibrato,
shaped by two token-dependent resonances, gated by a per-syllable
amplitude envelope with silent gaps.  The F0 deviation is rescaled so
its std over the voiced portion equals the requested f0_var exactly;
what the pitch tracker later measures then matches the request up to
estimator error.

Audio is never stored: the same (seed, factors, tokens) always renders
the same samples, so the waveform is recomputed on demand.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import Rng
from ..dsp import AudioBuffer, MelConfig, f0_variation_label, mel_spectrogram, syllable_rate_label
from .types import SPEAKER_BASE_F0, VOCAB_SIZE, FactorSpec, Utterance, class_templates

SAMPLE_RATE = 24_000
N_HARMONICS = 24
VOICED_FRACTION = 0.72
RAMP_S = 0.015
NOISE_FLOOR_DB = -50.0
PEAK_AMPLITUDE = 0.3


def token_resonances(token_id: int) -> tuple[float, float]:
    """Two fixed formant-like frequencies per pseudo-phoneme id."""
    if not 0 <= token_id < VOCAB_SIZE:
        raise ValueError(f"token id {token_id} outside [0, {VOCAB_SIZE})")
    f1 = 420.0 + 65.0 * (token_id % 8)
    f2 = 1100.0 + 230.0 * ((token_id // 8) % 4)
    return f1, f2


def _contour(shape: str, n: int) -> np.ndarray:
    u = np.arange(n) / max(n - 1, 1)
    if shape == "rise":
        raw = 2.0 * u - 1.0
    elif shape == "fall":
        raw = 1.0 - 2.0 * u
    elif shape == "peak":
        raw = 1.0 - 4.0 * np.abs(u - 0.5)
    else:
        raise ValueError(f"unknown contour shape {shape!r}")
    return raw


def render_audio(rng: Rng, factors: FactorSpec, tokens: np.ndarray, n_classes: int) -> AudioBuffer:
    factors.validate(n_classes)
    tokens = np.asarray(tokens)
    if tokens.size < 1:
        raise ValueError("need at least one token")
    template = class_templates(n_classes)[factors.class_id]

    syl_s = 1.0 / factors.rate
    n = int(round(tokens.size * syl_s * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE

    # per-syllable envelope: voiced span with cosine-free linear ramps,
    # then a gap; small per-syllable level variation for texture
    env = np.zeros(n)
    f1_t = np.full(n, 500.0)
    f2_t = np.full(n, 1400.0)
    levels = 0.85 + 0.15 * rng.uniform(tokens.size)
    for s, token in enumerate(tokens):
        a = int(round(s * syl_s * SAMPLE_RATE))
        b = min(int(round((s + VOICED_FRACTION) * syl_s * SAMPLE_RATE)), n)
        if b <= a:
            continue
        tt = (np.arange(a, b) - a) / SAMPLE_RATE
        span = (b - a) / SAMPLE_RATE
        env[a:b] = levels[s] * np.clip(np.minimum(tt, span - tt) / RAMP_S, 0.0, 1.0)
        f1, f2 = token_resonances(int(token))
        gap_end = min(int(round((s + 1) * syl_s * SAMPLE_RATE)), n)
        f1_t[a:gap_end] = f1
        f2_t[a:gap_end] = f2

    voiced_mask = env > 0.0
    contour = _contour(template.shape, n)
    phase0 = rng.uniform() * 2.0 * np.pi
    vibrato = np.sin(2.0 * np.pi * template.vibrato_hz * t + phase0)
    deviation = np.sqrt(template.rho) * contour + np.sqrt(2.0 * (1.0 - template.rho)) * vibrato
    dev_std = deviation[voiced_mask].std() if voiced_mask.any() else 0.0
    if dev_std > 0:
        deviation = deviation - deviation[voiced_mask].mean()
        deviation = deviation / deviation[voiced_mask].std()
    f0_t = SPEAKER_BASE_F0[factors.speaker_id] + factors.f0_var * deviation
    f0_t = np.clip(f0_t, 60.0, 480.0)

    phase = 2.0 * np.pi * np.cumsum(f0_t) / SAMPLE_RATE
    sig = np.zeros(n)
    bw2 = 2.0 * 250.0**2
    for h in range(1, N_HARMONICS + 1):
        fh = h * f0_t
        resonance = np.exp(-((fh - f1_t) ** 2) / bw2) + np.exp(-((fh - f2_t) ** 2) / bw2)
        # The 0.5 / h**1.5 term keeps the fundamental strong enough for the
        # pitch tracker; resonances alone leave harmonic 1 nearly silent.
        gain = 0.6 * resonance / h**1.2 + 0.5 / h**1.5
        sig += gain * np.sin(h * phase)
    sig *= env
    peak = np.abs(sig).max()
    if peak > 0:
        sig *= PEAK_AMPLITUDE / peak
    noise = PEAK_AMPLITUDE * 10.0 ** (NOISE_FLOOR_DB / 20.0) * rng.normal(n)
    return AudioBuffer(sig + noise, SAMPLE_RATE)


def generate_utterance(
    rng: Rng,
    factors: FactorSpec,
    tokens: np.ndarray,
    n_classes: int = 6,
    mel_cfg: MelConfig = MelConfig(),
) -> Utterance:
    """Render, analyze, and package one utterance (labels left unset)."""
    audio = render_audio(rng, factors, tokens, n_classes)
    mel = mel_spectrogram(audio, mel_cfg)
    mel.frames = mel.frames.astype(np.float32)
    try:
        measured_f0 = f0_variation_label(audio)
    except ValueError:
        measured_f0 = None
    return Utterance(
        tokens=np.asarray(tokens, dtype=np.int64),
        mel=mel,
        syllable_count=int(tokens.size),
        duration_s=audio.duration_s,
        speaker_id=factors.speaker_id,
        truth=factors,
        measured_f0_var=measured_f0,
    )


def measured_rate(utt: Utterance) -> float:
    return syllable_rate_label(utt.syllable_count, utt.duration_s)
