import wave

import numpy as np
import pytest

from ssvc.autodiff import Rng
from ssvc.dsp import AudioBuffer, read_raw_f32, read_wav, write_raw_f32, write_wav


def test_audio_buffer_validation():
    with pytest.raises(ValueError, match="mono"):
        AudioBuffer(np.zeros((2, 100)))
    with pytest.raises(ValueError, match="sample_rate"):
        AudioBuffer(np.zeros(10), 0)
    with pytest.raises(ValueError, match="non-finite"):
        AudioBuffer(np.array([0.0, np.nan]))


def test_wav_round_trip_within_quantization(tmp_path):
    rng = Rng(95)
    audio = AudioBuffer(np.clip(rng.normal(5000) * 0.3, -1, 1), 24_000)
    path = tmp_path / "t.wav"
    write_wav(path, audio)
    back = read_wav(path)
    assert back.sample_rate == 24_000
    assert back.samples.size == 5000
    assert np.max(np.abs(back.samples - audio.samples)) <= 1.0 / 32767 + 1e-9


def test_wav_reader_rejects_stereo(tmp_path):
    path = tmp_path / "stereo.wav"
    with wave.open(str(path), "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(24_000)
        w.writeframes(b"\x00\x00" * 200)
    with pytest.raises(ValueError, match="mono"):
        read_wav(path)


def test_raw_f32_round_trip(tmp_path):
    rng = Rng(96)
    audio = AudioBuffer(rng.normal(777).astype(np.float32).astype(np.float64), 24_000)
    path = tmp_path / "t.rf32"
    write_raw_f32(path, audio)
    back = read_raw_f32(path)
    assert back.sample_rate == 24_000
    assert np.array_equal(back.samples, audio.samples)


def test_raw_f32_bad_magic(tmp_path):
    path = tmp_path / "bad.rf32"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        read_raw_f32(path)


def test_raw_f32_truncation(tmp_path):
    path = tmp_path / "trunc.rf32"
    write_raw_f32(path, AudioBuffer(np.zeros(100), 24_000))
    data = path.read_bytes()[:-50]
    path.write_bytes(data)
    with pytest.raises(ValueError, match="truncated"):
        read_raw_f32(path)
