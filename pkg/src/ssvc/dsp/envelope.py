"""Prosody measurements taken directly on mel frames.

Synthesized output exists only as a mel spectrogram, so rate and pitch
statistics for evaluation have to come from the frames themselves:
syllables from peaks of the loudness envelope, F0 from a harmonic comb
scored against the mel filter centers.  Both are stand-ins for waveform
measurements and are calibrated on generated utterances with known
ground truth.
"""

from __future__ import annotations

import numpy as np
import scipy.signal

from .mel import MelConfig, filter_center_freqs


def loudness_envelope(frames: np.ndarray) -> np.ndarray:
    """Per-frame log total energy from (T, n_mels) log-mel frames."""
    return np.log(np.exp(frames).sum(axis=1) + 1e-20)


def count_syllables(frames: np.ndarray, hop_s: float = 0.0125) -> int:
    """Count loudness peaks separated by dips, one per syllable.

    Works on the normalized log-energy envelope; a peak must clear a
    quarter of the observed dynamic range and sit at least 60 ms from
    its neighbors.
    """
    env = loudness_envelope(frames)
    span = env.max() - env.min()
    if span <= 1e-6:
        return 0
    norm = (env - env.min()) / span
    # pad with the floor so peaks at either edge keep their prominence
    padded = np.concatenate([[0.0], norm, [0.0]])
    min_gap = max(1, int(round(0.06 / hop_s)))
    peaks, _ = scipy.signal.find_peaks(padded, height=0.35, prominence=0.25, distance=min_gap)
    return int(peaks.size)


def syllable_rate_from_mel(frames: np.ndarray, hop_s: float = 0.0125) -> float:
    duration = frames.shape[0] * hop_s
    if duration <= 0:
        return 0.0
    return count_syllables(frames, hop_s) / duration


def f0_track_from_mel(
    frames: np.ndarray,
    cfg: MelConfig = MelConfig(),
    fmin: float = 80.0,
    fmax: float = 400.0,
    n_candidates: int = 160,
    n_harmonics: int = 8,
) -> np.ndarray:
    """Per-frame F0 by scoring harmonic combs against mel energies.

    Returns 0.0 for frames whose best comb is not clearly voiced.
    Resolution is limited by mel spacing; good enough for contour
    statistics, not for fine pitch.
    """
    centers = filter_center_freqs(cfg)
    candidates = np.geomspace(fmin, fmax, n_candidates)
    energies = np.exp(frames)

    # weight[c, m]: how much filter m contributes to comb c
    weight = np.zeros((n_candidates, centers.size))
    for ci, f0 in enumerate(candidates):
        for h in range(1, n_harmonics + 1):
            f = f0 * h
            if f >= centers[-1]:
                break
            m = int(np.argmin(np.abs(centers - f)))
            weight[ci, m] += 1.0 / h
    weight /= weight.sum(axis=1, keepdims=True)

    scores = energies @ weight.T  # (T, n_candidates)
    best = np.argmax(scores, axis=1)
    total = energies.sum(axis=1)
    peak_share = scores[np.arange(len(best)), best] / (total + 1e-20)
    f0 = candidates[best]
    f0[peak_share < 0.05] = 0.0
    loud = total > total.max() * 0.05
    f0[~loud] = 0.0
    return f0


def f0_variation_from_mel(frames: np.ndarray, cfg: MelConfig = MelConfig()) -> float:
    """Std of the voiced mel-domain F0 track, 0.0 if nearly nothing is voiced."""
    track = f0_track_from_mel(frames, cfg)
    voiced = track[track > 0]
    if voiced.size < 2:
        return 0.0
    return float(voiced.std())
