"""Signal processing: mel analysis, cepstral distortion, pitch, labels."""

from .audio import AudioBuffer, read_raw_f32, read_wav, write_raw_f32, write_wav
from .envelope import (
    count_syllables,
    f0_track_from_mel,
    f0_variation_from_mel,
    loudness_envelope,
    syllable_rate_from_mel,
)
from .labels import (
    WhitenStats,
    apply_whitening,
    fit_whitening,
    invert_whitening,
    syllable_rate_label,
)
from .mel import (
    LOG_FLOOR,
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
from .metrics import aligned_average_cost, mcd_dtw
from .yin import PitchTrack, f0_variation_label, yin_f0

__all__ = [
    "AudioBuffer",
    "LOG_FLOOR",
    "MelConfig",
    "MelSpectrogram",
    "PitchTrack",
    "WhitenStats",
    "aligned_average_cost",
    "apply_whitening",
    "count_syllables",
    "f0_track_from_mel",
    "f0_variation_from_mel",
    "f0_variation_label",
    "filter_center_freqs",
    "fit_whitening",
    "frame_count",
    "hz_to_mel",
    "invert_whitening",
    "loudness_envelope",
    "mcd_dtw",
    "mel_filterbank",
    "mel_spectrogram",
    "mel_to_hz",
    "mfcc",
    "read_raw_f32",
    "read_wav",
    "syllable_rate_from_mel",
    "syllable_rate_label",
    "write_raw_f32",
    "write_wav",
    "yin_f0",
]
