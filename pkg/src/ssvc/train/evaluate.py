"""Objective evaluation: control accuracy, rate/F0 error, MCD-DTW.

All metrics run on synthesized mels; no audio is rendered.  Control
measurements use documented mel-domain stand-ins (energy-peak syllable
counting, harmonic-template F0 tracking) from the dsp package, which
are calibrated against generator truth in their own tests.

The function is read-only: checkpoints and the corpus are never
modified.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..corpus import Corpus, Utterance, measured_rate
from ..dsp import (
    MelSpectrogram,
    apply_whitening,
    f0_variation_from_mel,
    mcd_dtw,
    syllable_rate_from_mel,
)
from ..model import load_model
from .classifier import classify_mels
from .synthesize import coerce_control, prior_z_u, synthesize_batch

log = logging.getLogger("ssvc.train")


@dataclass
class EvalReport:
    mcd_dtw: float
    classifier_accuracy: Optional[float] = None
    rate_error: Optional[float] = None
    f0_error: Optional[float] = None
    confusion: Optional[np.ndarray] = None
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {
            "mcd_dtw": self.mcd_dtw,
            "classifier_accuracy": self.classifier_accuracy,
            "rate_error": self.rate_error,
            "f0_error": self.f0_error,
            "confusion": None if self.confusion is None else self.confusion.tolist(),
        }
        out.update({k: v for k, v in self.details.items()
                    if isinstance(v, (int, float, str, list))})
        return out


def _default_synth(params, cfg, max_frames, seed):
    dtype = params.parameters()[0][1].data.dtype

    def synth(utts: list[Utterance], controls: list) -> list[np.ndarray]:
        frames: list[np.ndarray] = []
        for lo in range(0, len(utts), 32):
            part = utts[lo:lo + 32]
            ctrl = np.concatenate(
                [coerce_control(cfg, c, 1, dtype) for c in controls[lo:lo + 32]])
            z_u = prior_z_u(cfg, len(part), "mean", seed, dtype)
            frames.extend(synthesize_batch(
                params, cfg, [u.tokens for u in part],
                [u.speaker_id for u in part], ctrl, z_u, max_frames=max_frames))
        return frames

    return synth


def evaluate(model_ckpt, corpus: Corpus, classifier_ckpt=None, *,
             n_utterances: Optional[int] = 100, max_frames: int = 400,
             seed: int = 0,
             synth_fn: Optional[Callable] = None,
             classify_fn: Optional[Callable] = None) -> EvalReport:
    """Score a checkpoint against the corpus test split.

    ``synth_fn(utts, controls)`` and ``classify_fn(frames_list)`` are
    injectable for tests and alternative backends; the defaults run the
    checkpoint's own decoder and the supplied evaluation classifier.
    """
    cfg, params, meta = load_model(model_ckpt)
    if meta.get("kind", "model") != "model":
        raise ValueError(f"{model_ckpt} is not a synthesis model checkpoint")

    test = corpus.test()
    if n_utterances is not None:
        test = test[:n_utterances]
    if not test:
        raise ValueError("corpus has no test utterances")
    synth = synth_fn or _default_synth(params, cfg, max_frames, seed)
    mel_cfg = test[0].mel.config
    sample_rate = test[0].mel.sample_rate
    hop_s = mel_cfg.hop_ms / 1000.0

    if cfg.z_s.kind == "discrete":
        k = cfg.z_s.size
        if corpus.n_classes != k:
            raise ValueError(
                f"corpus has {corpus.n_classes} classes, checkpoint expects {k}")
        if classify_fn is None:
            if classifier_ckpt is None:
                raise ValueError("discrete evaluation needs a classifier checkpoint")
            ccfg, cparams, cmeta = load_model(classifier_ckpt)
            if cmeta.get("kind") != "classifier":
                raise ValueError(f"{classifier_ckpt} is not a classifier checkpoint")
            if ccfg.z_s.size != k:
                raise ValueError(
                    f"classifier has {ccfg.z_s.size} classes, model has {k}")
            classify_fn = lambda mels: classify_mels(cparams, ccfg, mels)

        confusion = np.zeros((k, k), dtype=np.int64)
        mcd_vals = []
        for req in range(k):
            frames = synth(test, [req] * len(test))
            preds = classify_fn(frames)
            for u, p, fr in zip(test, preds, frames):
                confusion[req, int(p)] += 1
                if req == u.truth.class_id:
                    mcd_vals.append(mcd_dtw(MelSpectrogram(fr, mel_cfg, sample_rate),
                                            u.mel))
            log.info("evaluated control class %d/%d", req + 1, k)
        total = confusion.sum()
        accuracy = float(np.trace(confusion)) / total
        return EvalReport(
            mcd_dtw=float(np.mean(mcd_vals)),
            classifier_accuracy=accuracy,
            confusion=confusion,
            details={"n_utterances": len(test), "n_trials": int(total)})

    # continuous control: request each test utterance's own measured
    # attribute (whitened) and compare against what comes back
    attribute = corpus.meta.get("supervised_attribute")
    if corpus.whiten_stats is None or attribute not in ("rate", "f0_var"):
        raise ValueError(
            "continuous evaluation needs a corpus with whitened rate or "
            "f0_var labels")
    if attribute == "rate":
        requested_raw = np.array([measured_rate(u) for u in test])
    else:
        requested_raw = np.array([u.measured_f0_var for u in test], dtype=np.float64)
    requested_z = np.asarray(apply_whitening(corpus.whiten_stats, requested_raw),
                             dtype=np.float64)

    frames = synth(test, list(requested_z))
    if attribute == "rate":
        measured = np.array([syllable_rate_from_mel(fr, hop_s) for fr in frames])
    else:
        measured = np.array([f0_variation_from_mel(fr, cfg=mel_cfg) for fr in frames])
    error = float(np.mean(np.abs(requested_raw - measured)))
    mcd_vals = [mcd_dtw(MelSpectrogram(fr, mel_cfg, sample_rate), u.mel)
                for fr, u in zip(frames, test)]

    report = EvalReport(
        mcd_dtw=float(np.mean(mcd_vals)),
        details={"n_utterances": len(test),
                 "attribute": attribute,
                 "requested_raw": requested_raw.tolist(),
                 "requested_z": requested_z.tolist(),
                 "measured": measured.tolist()})
    if attribute == "rate":
        report.rate_error = error
    else:
        report.f0_error = error
    return report
