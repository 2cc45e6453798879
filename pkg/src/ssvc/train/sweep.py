"""Supervision-fraction sweep: train and evaluate at each fraction.

Corpora at different fractions share the same seed, and utterance
synthesis derives its randomness per utterance index, so every run in
the sweep sees identical audio and splits; only how many labels are
revealed changes.  The evaluation classifier trains once on ground
truth and is shared across fractions.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from pathlib import Path

from ..autodiff import Rng
from ..corpus import GenerationConfig, generate_corpus
from ..model import ModelConfig
from .classifier import train_classifier
from .config import TrainConfig
from .evaluate import evaluate
from .loop import train

log = logging.getLogger("ssvc.train")

DEFAULT_FRACTIONS = (0.005, 0.01, 0.05, 0.1, 0.3, 1.0)


def run_sweep(corpus_cfg: GenerationConfig, model_cfg: ModelConfig,
              train_cfg: TrainConfig, out_dir, corpus_seed: int = 0,
              fractions=DEFAULT_FRACTIONS,
              classifier_cfg: TrainConfig | None = None,
              eval_utterances: int | None = 100,
              train_fn=None, eval_fn=None) -> Path:
    """Returns the combined CSV path (columns fraction, metric, value)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_fn = train_fn or train
    eval_fn = eval_fn or evaluate

    classifier_path = None
    if model_cfg.z_s.kind == "discrete" and eval_fn is evaluate:
        first = generate_corpus(
            dataclasses.replace(corpus_cfg, supervision_fraction=float(fractions[0])),
            Rng(corpus_seed))
        cls_cfg = classifier_cfg or dataclasses.replace(train_cfg, alpha=1.0, gamma=1.0)
        log.info("training shared evaluation classifier")
        cls_result = train_classifier(first, model_cfg, cls_cfg, out_dir / "classifier")
        classifier_path = cls_result.checkpoint_path
        log.info("classifier held-out accuracy %.3f", cls_result.val_accuracy)

    csv_path = out_dir / "sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("fraction", "metric", "value"))
        for frac in fractions:
            cfg_f = dataclasses.replace(corpus_cfg, supervision_fraction=float(frac))
            corpus = generate_corpus(cfg_f, Rng(corpus_seed))
            run_dir = out_dir / f"frac_{frac:g}"
            tcfg = dataclasses.replace(train_cfg, supervision_fraction=float(frac))
            log.info("sweep fraction %g: training", frac)
            result = train_fn(corpus, model_cfg, tcfg, run_dir)
            report = eval_fn(result.checkpoint_path, corpus, classifier_path,
                             n_utterances=eval_utterances)
            rows = [("mcd_dtw", report.mcd_dtw)]
            if report.classifier_accuracy is not None:
                rows.append(("classifier_accuracy", report.classifier_accuracy))
            if report.rate_error is not None:
                rows.append(("rate_error", report.rate_error))
            if report.f0_error is not None:
                rows.append(("f0_error", report.f0_error))
            for metric, value in rows:
                writer.writerow((repr(float(frac)), metric, repr(float(value))))
            fh.flush()
            log.info("sweep fraction %g done: %s", frac,
                     ", ".join(f"{m}={v:.4f}" for m, v in rows))
    return csv_path
