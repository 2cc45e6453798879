"""The held-out evaluation classifier: K classes from mel alone.

This is evaluation tooling, so unlike the model trainer it reads the
generator's ground-truth class for every utterance.  Synthesis quality
is later scored by how often this classifier recovers the requested
class from generated mels.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..autodiff import Rng, Tensor, default_dtype, derive_seed, no_grad
from ..autodiff.nn import logsumexp, one_hot
from ..corpus import Corpus, Utterance
from ..model import (
    ModelConfig,
    build_classifier_params,
    eval_classifier_forward,
    pad_mels,
    save_checkpoint,
)
from .adam import adam_step, init_adam
from .batches import epoch_chunks
from .config import TrainConfig

log = logging.getLogger("ssvc.train")


@dataclass
class ClassifierResult:
    checkpoint_path: Path
    metrics_path: Path
    val_accuracy: float
    confusion: np.ndarray    # (K, K), rows true class, columns predicted


def _mel_batch(utts: list[Utterance], dtype):
    frames, fmask = pad_mels([u.mel.frames.astype(dtype) for u in utts])
    labels = np.array([u.truth.class_id for u in utts], dtype=np.int64)
    return frames, fmask, labels


def _cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    hot = Tensor(one_hot(labels, logits.shape[1], dtype=logits.data.dtype))
    picked = (logits * hot).sum(axis=1)
    ce = logsumexp(logits, axis=1) - picked
    return ce.sum() * (1.0 / labels.shape[0])


def classify_mels(params, cfg: ModelConfig, mels: list[np.ndarray],
                  chunk: int = 64) -> np.ndarray:
    """Predicted class ids for a list of (T, n_mels) frame arrays."""
    dtype = params.parameters()[0][1].data.dtype
    preds = []
    with no_grad():
        for i in range(0, len(mels), chunk):
            frames, fmask = pad_mels([m.astype(dtype) for m in mels[i:i + chunk]])
            logits = eval_classifier_forward(params, cfg, frames, fmask)
            preds.append(np.argmax(logits.data, axis=1))
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)


def _validate(params, cfg, utts, dtype) -> tuple[float, np.ndarray]:
    k = cfg.z_s.size
    confusion = np.zeros((k, k), dtype=np.int64)
    preds = classify_mels(params, cfg, [u.mel.frames for u in utts])
    for u, p in zip(utts, preds):
        confusion[u.truth.class_id, int(p)] += 1
    accuracy = float(np.trace(confusion)) / max(1, len(utts))
    return accuracy, confusion


def train_classifier(corpus: Corpus, model_cfg: ModelConfig,
                     train_cfg: TrainConfig, out_dir) -> ClassifierResult:
    model_cfg.validate()
    train_cfg.validate()
    if model_cfg.z_s.kind != "discrete":
        raise ValueError("the evaluation classifier needs a discrete latent spec")
    if corpus.n_classes != model_cfg.z_s.size:
        raise ValueError(
            f"corpus has {corpus.n_classes} classes, model spec {model_cfg.z_s.size}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dtype = np.float32 if train_cfg.precision == "f32" else np.float64

    with default_dtype(train_cfg.dtype_name):
        params = build_classifier_params(model_cfg, Rng(derive_seed(train_cfg.seed, "cls-init")))
    init_adam(params)

    train_utts = corpus.train()
    val_utts = corpus.val() or corpus.test()
    n = len(train_utts)
    if n == 0:
        raise ValueError("corpus has no training utterances")
    steps_per_epoch = len(epoch_chunks(np.arange(n), train_cfg.batch_size))

    metrics_path = out_dir / "classifier_metrics.csv"
    csv_file = open(metrics_path, "w", newline="")
    writer = csv.writer(csv_file)
    writer.writerow(("step", "loss", "val_accuracy"))

    epoch_loaded = -1
    chunks: list[np.ndarray] = []
    val_accuracy = 0.0
    confusion = np.zeros((model_cfg.z_s.size,) * 2, dtype=np.int64)
    try:
        for step in range(1, train_cfg.max_steps + 1):
            epoch = (step - 1) // steps_per_epoch
            pos = (step - 1) % steps_per_epoch
            if epoch != epoch_loaded:
                order = Rng(derive_seed(train_cfg.seed, "cls-epoch", epoch)).permutation(n)
                chunks = epoch_chunks(order, train_cfg.batch_size)
                epoch_loaded = epoch
            utts = [train_utts[int(i)] for i in chunks[pos]]
            frames, fmask, labels = _mel_batch(utts, dtype)

            params.zero_grad()
            logits = eval_classifier_forward(params, model_cfg, frames, fmask, train=True)
            loss = _cross_entropy(logits, labels)
            loss.backward()
            adam_step(params, train_cfg)

            if step == 1 or step % train_cfg.eval_every == 0 or step == train_cfg.max_steps:
                val_accuracy, confusion = _validate(params, model_cfg, val_utts, dtype)
                writer.writerow([str(step), repr(float(loss.data)), repr(val_accuracy)])
                csv_file.flush()
                log.info("classifier step %d/%d loss %.4f val acc %.3f",
                         step, train_cfg.max_steps, float(loss.data), val_accuracy)
    finally:
        csv_file.close()

    ckpt = out_dir / "classifier.ssvc"
    meta = {"kind": "classifier", "step": train_cfg.max_steps,
            "val_accuracy": val_accuracy,
            "confusion": confusion.tolist()}
    save_checkpoint(ckpt, model_cfg, params.state_arrays(), meta)
    return ClassifierResult(ckpt, metrics_path, val_accuracy, confusion)
