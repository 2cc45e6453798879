"""Pitch tracking by cumulative mean normalized difference (YIN).

Per frame: squared-difference function d(tau) over a fixed integration
window, cumulative mean normalization, first dip below the absolute
threshold (descending into its local minimum), then parabolic
interpolation of the normalized function around the chosen lag.  Frames
whose best dip never crosses the threshold are flagged unvoiced; they
still report the global-minimum lag as a rough estimate.

The difference function is computed with an FFT cross-correlation plus
cumulative energy terms, which is exactly the O(T log T) rewrite of the
naive double loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer


@dataclass
class PitchTrack:
    f0_hz: np.ndarray      # per-frame estimate, 0.0 where no lag was usable
    voiced: np.ndarray     # per-frame bool
    hop_s: float

    @property
    def n_frames(self) -> int:
        return self.f0_hz.size


def yin_f0(
    audio: AudioBuffer,
    win_ms: float = 40.0,
    hop_ms: float = 12.5,
    fmin: float = 50.0,
    fmax: float = 600.0,
    threshold: float = 0.1,
) -> PitchTrack:
    sr = audio.sample_rate
    if fmin >= fmax:
        raise ValueError(f"need fmin < fmax, got {fmin} >= {fmax}")
    if fmax > sr / 2:
        raise ValueError(f"fmax {fmax} above Nyquist for {sr} Hz audio")
    frame_len = int(round(win_ms * sr / 1000.0))
    hop_len = int(round(hop_ms * sr / 1000.0))
    tau_max = int(sr / fmin)
    tau_min = max(2, int(sr / fmax))
    if tau_max >= frame_len:
        raise ValueError(
            f"window of {frame_len} samples too short for fmin {fmin} Hz "
            f"(needs lag {tau_max})"
        )
    x = audio.samples
    if x.size < frame_len:
        raise ValueError(f"audio of {x.size} samples shorter than one {frame_len}-sample window")

    w_int = frame_len - tau_max  # integration window length
    n_frames = 1 + (x.size - frame_len) // hop_len
    n_fft = 1
    while n_fft < frame_len + w_int:
        n_fft *= 2

    starts = hop_len * np.arange(n_frames)
    frames = x[starts[:, None] + np.arange(frame_len)]

    # d(tau) = sum_{j<w_int} (x[j] - x[j+tau])^2, expanded into three terms
    head_energy = (frames[:, :w_int] ** 2).sum(axis=1, keepdims=True)
    sq_cumsum = np.concatenate(
        [np.zeros((n_frames, 1)), np.cumsum(frames**2, axis=1)], axis=1
    )
    taus = np.arange(tau_max + 1)
    shifted_energy = sq_cumsum[:, taus + w_int] - sq_cumsum[:, taus]
    spec_full = np.fft.rfft(frames, n_fft, axis=1)
    spec_head = np.fft.rfft(frames[:, :w_int], n_fft, axis=1)
    corr = np.fft.irfft(spec_full * np.conj(spec_head), n_fft, axis=1)[:, : tau_max + 1]
    d = head_energy + shifted_energy - 2.0 * corr
    d = np.maximum(d, 0.0)  # rounding can push exact zeros slightly negative

    # cumulative mean normalization; d'(0) = 1 by definition
    cum = np.cumsum(d[:, 1:], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cmnd = np.ones_like(d)
        cmnd[:, 1:] = d[:, 1:] * taus[1:] / np.where(cum > 0, cum, 1.0)
    cmnd[:, 1:][cum == 0] = 1.0  # flat silence: no dip anywhere

    f0 = np.zeros(n_frames)
    voiced = np.zeros(n_frames, dtype=bool)
    for i in range(n_frames):
        row = cmnd[i]
        tau = _pick_lag(row, tau_min, tau_max, threshold)
        voiced[i] = row[tau] < threshold
        shift = _parabolic_offset(row, tau)
        f0[i] = sr / (tau + shift)
    return PitchTrack(f0, voiced, hop_len / sr)


def _pick_lag(row: np.ndarray, tau_min: int, tau_max: int, threshold: float) -> int:
    tau = tau_min
    while tau <= tau_max:
        if row[tau] < threshold:
            while tau + 1 <= tau_max and row[tau + 1] < row[tau]:
                tau += 1
            return tau
        tau += 1
    return int(tau_min + np.argmin(row[tau_min: tau_max + 1]))


def _parabolic_offset(row: np.ndarray, tau: int) -> float:
    """Vertex offset of the parabola through (tau-1, tau, tau+1), clamped to ±0.5."""
    if tau <= 0 or tau + 1 >= row.size:
        return 0.0
    left, mid, right = row[tau - 1], row[tau], row[tau + 1]
    denom = left - 2.0 * mid + right
    if denom == 0.0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def f0_variation_label(audio: AudioBuffer, **yin_kwargs) -> float:
    """Population std of the voiced-frame F0 contour, in Hz."""
    track = yin_f0(audio, **yin_kwargs)
    voiced_f0 = track.f0_hz[track.voiced]
    if voiced_f0.size < 2:
        raise ValueError("unvoiced utterance: fewer than 2 voiced frames")
    return float(voiced_f0.std())
