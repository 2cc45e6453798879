"""The Adam training loop: shuffling, metrics CSV, checkpoints, resume.

Every source of randomness in a step is derived statelessly from
(seed, step) or (seed, epoch), so a run resumed from a checkpoint
replays the exact same noise, batches, and updates as the original.

Metrics CSV schema (one row at step 1, then every ``eval_every`` steps,
plus the final step; floats are written with ``repr`` so reruns are
byte-identical):

    step          training step, 1-based
    total         objective value for the step's batch (maximized)
    recon         reconstruction part of the batch mean
    kl_zu         prosody-latent KL part (weighted as it enters total)
    zs_term       control-latent prior/entropy part
    cls           classifier-loss part (alpha-weighted)
    entropy       mean class-posterior entropy on unsupervised rows
    probe_entropy mean q(z_s) entropy on the fixed probe batch
    probe_kl_zu   mean q(z_u) KL on the probe batch
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from collections import deque
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..autodiff import Rng, Tensor, default_dtype, derive_seed, no_grad
from ..autodiff.nn import softmax
from ..corpus import Corpus, Utterance
from ..model import (
    ModelConfig,
    build_params,
    encode_text,
    load_checkpoint,
    posterior_trunk,
    posterior_zs,
    posterior_zu,
    save_checkpoint,
    speaker_embedding,
    text_summary,
)
from ..objective import clamp_log_var, kl_diag_gaussian_rows, objective_total
from .adam import adam_step, init_adam
from .batches import batch_from_utterances, epoch_chunks
from .config import TrainConfig, TrainResult

log = logging.getLogger("ssvc.train")

CSV_HEADER = ("step", "total", "recon", "kl_zu", "zs_term", "cls",
              "entropy", "probe_entropy", "probe_kl_zu")

LOG_TWO_PI_E = math.log(2.0 * math.pi) + 1.0


def collapse_diagnostic(params, cfg: ModelConfig, batch) -> tuple[float, float]:
    """Mean q(z_s) entropy and mean q(z_u) KL on a probe batch.

    Runs in eval mode without building a graph.  For the discrete latent
    the entropy is the usual categorical one in [0, ln K]; for the
    continuous latent it is the differential entropy of the Gaussian
    posterior (which may be negative).  The z_u posterior is probed at
    the posterior mean control: the expected one-hot for discrete, the
    Gaussian mean for continuous.
    """
    with no_grad():
        text = encode_text(params, cfg, batch.token_ids, batch.token_mask,
                           batch.speakers)
        summ = text_summary(params, cfg, text, batch.token_mask)
        spk_e = speaker_embedding(params, batch.speakers)
        trunk = posterior_trunk(params, "post", cfg, batch.frames, batch.frame_mask)
        qzs = posterior_zs(params, cfg, batch.frames, batch.frame_mask,
                           summ, spk_e, trunk=trunk)
        if cfg.z_s.kind == "discrete":
            probs = softmax(qzs.logits).data
            safe = np.where(probs > 0, probs, 1.0)
            entropy = float(-(probs * np.log(safe)).sum(axis=1).mean())
            z_probe = Tensor(probs)
        else:
            lv = np.clip(qzs.log_var.data, -20.0, 20.0)
            entropy = float((0.5 * (LOG_TWO_PI_E + lv)).sum(axis=1).mean())
            z_probe = qzs.mean
        qzu = posterior_zu(params, cfg, batch.frames, batch.frame_mask,
                           summ, spk_e, z_probe, trunk=trunk)
        kl = kl_diag_gaussian_rows(qzu.mean, clamp_log_var(qzu.log_var))
    return entropy, float(kl.data.mean())


def _supervised_count(utts: list[Utterance], cfg: ModelConfig) -> int:
    if cfg.z_s.kind == "discrete":
        return sum(u.label_discrete is not None for u in utts)
    return sum(u.label_continuous is not None for u in utts)


def _check_corpus(corpus: Corpus, cfg: ModelConfig) -> None:
    if cfg.z_s.kind == "discrete" and corpus.n_classes != cfg.z_s.size:
        raise ValueError(
            f"corpus has {corpus.n_classes} classes but the model's discrete "
            f"latent has {cfg.z_s.size}")


def _dump_abort(out_dir: Path, step: int, recent, params) -> Path:
    bad_params = [name for name, t in params.parameters()
                  if not np.all(np.isfinite(t.data))]
    payload = {
        "step": step,
        "recent_totals": [[s, repr(v)] for s, v in recent],
        "non_finite_params": bad_params,
        "max_abs_param": repr(max((float(np.max(np.abs(t.data)))
                                   for _, t in params.parameters()), default=0.0)),
    }
    path = out_dir / "abort_diagnostics.json"
    path.write_text(json.dumps(payload, indent=2))
    return path


def train(corpus: Corpus, model_cfg: ModelConfig, train_cfg: TrainConfig,
          out_dir, resume=None, params=None) -> TrainResult:
    """Run the semi-supervised objective to max_steps; returns paths.

    ``resume`` points at a checkpoint written by an earlier run with the
    same configs; training continues from its recorded step.  ``params``
    lets callers supply a pre-built store (tests, warm starts); when
    given it must match the model config and precision.
    """
    model_cfg.validate()
    train_cfg.validate()
    _check_corpus(corpus, model_cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dtype = np.float32 if train_cfg.precision == "f32" else np.float64

    if params is None:
        with default_dtype(train_cfg.dtype_name):
            params = build_params(model_cfg, Rng(derive_seed(train_cfg.seed, "init")))
    init_adam(params)

    start_step = 0
    if resume is not None:
        rcfg, meta, arrays = load_checkpoint(resume)
        if rcfg != model_cfg:
            raise ValueError("resume checkpoint was written with a different model config")
        params.load_state_arrays(arrays)
        start_step = int(meta["step"])
        if start_step >= train_cfg.max_steps:
            raise ValueError(
                f"checkpoint is already at step {start_step}, max_steps is "
                f"{train_cfg.max_steps}")

    train_utts = corpus.train()
    n = len(train_utts)
    if n == 0:
        raise ValueError("corpus has no training utterances")
    sup_count = _supervised_count(train_utts, model_cfg)
    log.info("training on %d utterances, %d supervised per epoch", n, sup_count)

    steps_per_epoch = len(epoch_chunks(np.arange(n), train_cfg.batch_size))
    probe_batch = batch_from_utterances(
        train_utts[:min(train_cfg.probe_size, n)], model_cfg, dtype)

    metrics_path = out_dir / "metrics.csv"
    fresh = start_step == 0 or not metrics_path.exists()
    csv_file = open(metrics_path, "w" if fresh else "a", newline="")
    writer = csv.writer(csv_file)
    if fresh:
        writer.writerow(CSV_HEADER)
        csv_file.flush()

    epoch_loaded = -1
    chunks: list[np.ndarray] = []
    consecutive_bad = 0
    recent: deque = deque(maxlen=20)
    t_last = time.perf_counter()
    final_path = out_dir / "ckpt_final.ssvc"

    try:
        for step in range(start_step + 1, train_cfg.max_steps + 1):
            epoch = (step - 1) // steps_per_epoch
            pos = (step - 1) % steps_per_epoch
            if epoch != epoch_loaded:
                order = Rng(derive_seed(train_cfg.seed, "epoch", epoch)).permutation(n)
                chunks = epoch_chunks(order, train_cfg.batch_size)
                epoch_loaded = epoch
            batch = batch_from_utterances(
                [train_utts[int(i)] for i in chunks[pos]], model_cfg, dtype)

            step_rng = Rng(derive_seed(train_cfg.seed, "step", step))
            params.zero_grad()
            bd = objective_total(params, model_cfg, batch, step_rng,
                                 alpha=train_cfg.alpha, gamma=train_cfg.gamma,
                                 train=True)
            total = float(bd.total.data)
            recent.append((step, total))

            if not math.isfinite(total):
                consecutive_bad += 1
                log.warning("non-finite objective at step %d (%d consecutive)",
                            step, consecutive_bad)
                if consecutive_bad >= 10:
                    path = _dump_abort(out_dir, step, recent, params)
                    raise RuntimeError(
                        f"objective non-finite for {consecutive_bad} consecutive "
                        f"steps; diagnostics written to {path}")
            else:
                consecutive_bad = 0
                (bd.total * (-1.0)).backward()
                adam_step(params, train_cfg)

            if step == 1 or step % train_cfg.eval_every == 0 or step == train_cfg.max_steps:
                probe_ent, probe_kl = collapse_diagnostic(params, model_cfg, probe_batch)
                writer.writerow([str(step), repr(total), repr(bd.recon),
                                 repr(bd.kl_zu), repr(bd.zs_term), repr(bd.cls),
                                 repr(bd.entropy), repr(probe_ent), repr(probe_kl)])
                csv_file.flush()
                now = time.perf_counter()
                done = step - start_step
                log.info("step %d/%d total %.3f probe_entropy %.3f (%.2f s/step)",
                         step, train_cfg.max_steps, total, probe_ent,
                         (now - t_last) / max(1, min(train_cfg.eval_every, done)))
                t_last = now

            if step % train_cfg.checkpoint_every == 0 or step == train_cfg.max_steps:
                meta = {"kind": "model", "step": step,
                        "train_config": asdict(train_cfg),
                        "supervised_count": sup_count}
                save_checkpoint(out_dir / f"ckpt_{step:06d}.ssvc", model_cfg,
                                params.state_arrays(), meta)
                if step == train_cfg.max_steps:
                    save_checkpoint(final_path, model_cfg,
                                    params.state_arrays(), meta)
    finally:
        csv_file.close()

    return TrainResult(final_path, metrics_path, train_cfg.max_steps - start_step,
                       sup_count)
