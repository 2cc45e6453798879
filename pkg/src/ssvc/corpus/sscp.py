"""Binary corpus files.

Layout, little-endian throughout:

    magic   4 bytes "SSCP"
    version u32     currently 1
    meta    u32 length + that many bytes of UTF-8 JSON
    count   u32     number of utterances
    then per utterance:
        n_tokens u16, token ids u16 each
        mel block (NDAR format), followed by mel sample rate u32
        flags u8: bit0 discrete label, bit1 continuous label, bit2 measured f0
        label_discrete u16 (present iff bit0)
        label_continuous f64 (present iff bit1)
        measured_f0_var f64 (present iff bit2)
        syllable_count u16, duration f64, speaker u16
        truth: class u16, rate f64, f0_var f64, speaker u16

The meta JSON carries the generation config, seed, splits, whitening
statistics, and the mel config, so a load rebuilds the corpus object
field-for-field.
"""

from __future__ import annotations

import json
import struct
from typing import BinaryIO

import numpy as np

from ..autodiff.ndar import FormatError, read_ndar, write_ndar
from ..dsp import MelConfig, MelSpectrogram, WhitenStats
from .types import Corpus, FactorSpec, Utterance

MAGIC = b"SSCP"
VERSION = 1


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    start = f.tell()
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated while reading {what}", start)
    return buf


def save_corpus(corpus: Corpus, path) -> None:
    meta = dict(corpus.meta)
    meta["splits"] = {
        "train": corpus.train_idx.tolist(),
        "val": corpus.val_idx.tolist(),
        "test": corpus.test_idx.tolist(),
    }
    meta["whiten"] = _whiten_to_json(corpus.whiten_stats)
    if corpus.utterances:
        meta["mel_config"] = _mel_cfg_to_json(corpus.utterances[0].mel.config)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        blob = json.dumps(meta).encode("utf-8")
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(corpus.utterances)))
        for utt in corpus.utterances:
            _write_utterance(f, utt)


def load_corpus(path) -> Corpus:
    with open(path, "rb") as f:
        start = f.tell()
        magic = _read_exact(f, 4, "corpus magic")
        if magic != MAGIC:
            raise FormatError(f"bad corpus magic {magic!r}, expected {MAGIC!r}", start)
        (version,) = struct.unpack("<I", _read_exact(f, 4, "corpus version"))
        if version != VERSION:
            raise FormatError(f"unsupported corpus version {version}, reader supports {VERSION}", start + 4)
        (meta_len,) = struct.unpack("<I", _read_exact(f, 4, "meta length"))
        meta = json.loads(_read_exact(f, meta_len, "meta block").decode("utf-8"))
        (count,) = struct.unpack("<I", _read_exact(f, 4, "utterance count"))
        mel_cfg = _mel_cfg_from_json(meta.pop("mel_config", None))
        utts = [_read_utterance(f, mel_cfg) for _ in range(count)]
    splits = meta.pop("splits")
    whiten = _whiten_from_json(meta.pop("whiten"))
    return Corpus(
        utterances=utts,
        whiten_stats=whiten,
        train_idx=np.asarray(splits["train"], dtype=np.int64),
        val_idx=np.asarray(splits["val"], dtype=np.int64),
        test_idx=np.asarray(splits["test"], dtype=np.int64),
        meta=meta,
    )


def _write_utterance(f: BinaryIO, utt: Utterance) -> None:
    tokens = np.asarray(utt.tokens, dtype=np.uint16)
    f.write(struct.pack("<H", tokens.size))
    f.write(tokens.astype("<u2").tobytes())
    write_ndar(f, utt.mel.frames)
    f.write(struct.pack("<I", utt.mel.sample_rate))
    flags = (
        (1 if utt.label_discrete is not None else 0)
        | (2 if utt.label_continuous is not None else 0)
        | (4 if utt.measured_f0_var is not None else 0)
    )
    f.write(struct.pack("<B", flags))
    if utt.label_discrete is not None:
        f.write(struct.pack("<H", utt.label_discrete))
    if utt.label_continuous is not None:
        f.write(struct.pack("<d", utt.label_continuous))
    if utt.measured_f0_var is not None:
        f.write(struct.pack("<d", utt.measured_f0_var))
    f.write(struct.pack("<HdH", utt.syllable_count, utt.duration_s, utt.speaker_id))
    t = utt.truth
    f.write(struct.pack("<HddH", t.class_id, t.rate, t.f0_var, t.speaker_id))


def _read_utterance(f: BinaryIO, mel_cfg: MelConfig) -> Utterance:
    (n_tokens,) = struct.unpack("<H", _read_exact(f, 2, "token count"))
    tokens = np.frombuffer(_read_exact(f, 2 * n_tokens, "token ids"), dtype="<u2").astype(np.int64)
    frames = read_ndar(f)
    (mel_sr,) = struct.unpack("<I", _read_exact(f, 4, "mel sample rate"))
    (flags,) = struct.unpack("<B", _read_exact(f, 1, "label flags"))
    label_discrete = label_continuous = measured_f0 = None
    if flags & 1:
        (label_discrete,) = struct.unpack("<H", _read_exact(f, 2, "discrete label"))
    if flags & 2:
        (label_continuous,) = struct.unpack("<d", _read_exact(f, 8, "continuous label"))
    if flags & 4:
        (measured_f0,) = struct.unpack("<d", _read_exact(f, 8, "measured f0 std"))
    syllable_count, duration, speaker = struct.unpack("<HdH", _read_exact(f, 12, "utterance fields"))
    cls, rate, f0_var, t_speaker = struct.unpack("<HddH", _read_exact(f, 20, "truth factors"))
    return Utterance(
        tokens=tokens,
        mel=MelSpectrogram(frames, mel_cfg, mel_sr),
        syllable_count=syllable_count,
        duration_s=duration,
        speaker_id=speaker,
        truth=FactorSpec(cls, rate, f0_var, t_speaker),
        label_discrete=label_discrete,
        label_continuous=label_continuous,
        measured_f0_var=measured_f0,
    )


def _whiten_to_json(stats: WhitenStats | None):
    if stats is None:
        return None
    return {
        "mode": stats.mode,
        "mean": stats.mean.tolist(),
        "scale": None if stats.scale is None else stats.scale.tolist(),
        "matrix": None if stats.matrix is None else stats.matrix.tolist(),
        "inverse": None if stats.inverse is None else stats.inverse.tolist(),
    }


def _whiten_from_json(obj) -> WhitenStats | None:
    if obj is None:
        return None
    arr = lambda v: None if v is None else np.asarray(v, dtype=np.float64)
    return WhitenStats(obj["mode"], arr(obj["mean"]), arr(obj["scale"]), arr(obj["matrix"]), arr(obj["inverse"]))


def _mel_cfg_to_json(cfg: MelConfig) -> dict:
    return {
        "frame_ms": cfg.frame_ms,
        "hop_ms": cfg.hop_ms,
        "fft_size": cfg.fft_size,
        "n_mels": cfg.n_mels,
        "fmin": cfg.fmin,
        "fmax": cfg.fmax,
    }


def _mel_cfg_from_json(obj) -> MelConfig:
    if obj is None:
        return MelConfig()
    return MelConfig(**obj)
