"""Variational bounds and the semi-supervised training objective.

The public entry points mirror how a batch is consumed during training:

- `elbo_supervised`: bound for utterances whose control value is known.
- `elbo_unsupervised_discrete`: enumerates every class, weighting the
  per-class supervised bound by the class posterior and adding its
  entropy.
- `elbo_unsupervised_continuous`: single reparameterized z_s sample,
  with the entropy realized as -log q at that sample.
- `objective_total`: full batch objective with supervision weight gamma
  and posterior-training weight alpha.

All bounds are values to *maximize*; the trainer negates.

Reproducibility contract: noise and dropout streams are derived from
the passed rng with fixed tags ("zu-eps", "zs-eps", "encoder",
"decode"[, k]), so a test can replay any internal pass by deriving the
same streams.  The unsupervised discrete bound shares one z_u noise
draw across the enumerated classes (variance reduction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..autodiff import Rng, Tensor
from ..autodiff.nn import logsumexp, one_hot, softmax
from ..model import (
    ModelConfig,
    condition_on_latents,
    decode,
    encode_text,
    laplace_log_likelihood_rows,
    posterior_trunk,
    posterior_zs,
    posterior_zu,
    speaker_embedding,
    text_summary,
)
from .terms import (
    LatentSample,
    _check_one_hot,
    clamp_log_var,
    gaussian_log_density_rows,
    kl_diag_gaussian_rows,
    std_normal_log_density_rows,
)


@dataclass
class ObjectiveBatch:
    """Padded utterance batch plus supervision bookkeeping.

    `labels` holds class indices (discrete z_s) or whitened attribute
    rows (continuous z_s); entries where `sup_mask` is False are
    ignored.  Mel frame count must be a multiple of the model's
    reduction factor (pad_mels takes care of that).
    """

    token_ids: np.ndarray
    token_mask: np.ndarray
    speakers: np.ndarray
    frames: np.ndarray
    frame_mask: np.ndarray
    labels: np.ndarray | None = None
    sup_mask: np.ndarray | None = None

    @property
    def size(self) -> int:
        return int(self.token_ids.shape[0])

    def subset(self, idx) -> "ObjectiveBatch":
        return ObjectiveBatch(
            token_ids=self.token_ids[idx],
            token_mask=self.token_mask[idx],
            speakers=self.speakers[idx],
            frames=self.frames[idx],
            frame_mask=self.frame_mask[idx],
            labels=None if self.labels is None else self.labels[idx],
            sup_mask=None if self.sup_mask is None else self.sup_mask[idx],
        )


@dataclass
class LossBreakdown:
    """Scalar view of one objective evaluation (values to maximize).

    The floats are batch means of the per-utterance terms, weighted
    exactly as they enter `total`, so
    `total ~= recon - kl_zu + zs_term + cls` up to a few ulps.  `total`
    keeps the autodiff graph; `row_totals` is the detached per-utterance
    contribution in original batch order.
    """

    recon: float
    kl_zu: float
    zs_term: float
    cls: float
    entropy: float
    total: Tensor
    row_totals: np.ndarray

    def parts_total(self) -> float:
        return self.recon - self.kl_zu + self.zs_term + self.cls


@dataclass
class _Pass:
    """Per-row tensors from one conditional decode."""

    recon: Tensor          # (B,) masked Laplace log likelihood
    kl: Tensor             # (B,) KL(q(z_u|...) || N(0, I))
    zs: Tensor | float     # (B,) or scalar log-prior (minus log q if sampled)
    sample: LatentSample


def _prepare(params, cfg: ModelConfig, batch: ObjectiveBatch, rng: Rng | None,
             train: bool):
    enc_rng = rng.split("encoder") if train else None
    text = encode_text(params, cfg, batch.token_ids, batch.token_mask,
                       batch.speakers, train=train, rng=enc_rng)
    summ = text_summary(params, cfg, text, batch.token_mask)
    spk_e = speaker_embedding(params, batch.speakers)
    trunk = posterior_trunk(params, "post", cfg, batch.frames, batch.frame_mask,
                            train=train)
    return text, summ, spk_e, trunk


def _coerce_zs(cfg: ModelConfig, z_s_value, dtype) -> Tensor:
    width = cfg.z_s.width
    if isinstance(z_s_value, Tensor):
        arr = z_s_value.data
    else:
        arr = np.asarray(z_s_value)
    if cfg.z_s.kind == "discrete":
        if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
            if arr.min() < 0 or arr.max() >= cfg.z_s.size:
                raise ValueError(
                    f"class labels must lie in [0, {cfg.z_s.size}), "
                    f"got range [{arr.min()}, {arr.max()}]"
                )
            arr = one_hot(arr, cfg.z_s.size, dtype=dtype)
        else:
            _check_one_hot(arr, cfg.z_s.size)
    elif arr.ndim == 1 and width == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ValueError(f"z_s must be (batch, {width}), got shape {arr.shape}")
    if isinstance(z_s_value, Tensor):
        return z_s_value
    return Tensor(arr.astype(dtype))


def _conditional_pass(params, cfg: ModelConfig, batch: ObjectiveBatch,
                      text: Tensor, summ: Tensor, spk_e: Tensor, trunk: Tensor,
                      zs_value: Tensor, zs_log_prior, eps: np.ndarray,
                      dec_rng: Rng | None, train: bool,
                      source: str) -> _Pass:
    qzu = posterior_zu(params, cfg, batch.frames, batch.frame_mask, summ,
                       spk_e, zs_value, train=train, trunk=trunk)
    lv = clamp_log_var(qzu.log_var)
    z_u = qzu.mean + (lv * 0.5).exp() * Tensor(eps.astype(qzu.mean.data.dtype))
    cond = condition_on_latents(cfg, text, z_u, zs_value, batch.token_mask)
    res = decode(params, cfg, cond, batch.token_mask, teacher=batch.frames,
                 train=train, rng=dec_rng)
    recon = laplace_log_likelihood_rows(batch.frames, res.frames,
                                        cfg.laplace_scale, batch.frame_mask)
    kl = kl_diag_gaussian_rows(qzu.mean, lv)
    sample = LatentSample(z_u=z_u, eps=eps, z_s=zs_value, source=source)
    return _Pass(recon=recon, kl=kl, zs=zs_log_prior, sample=sample)


def _zu_eps(cfg: ModelConfig, batch_size: int, rng: Rng) -> np.ndarray:
    return rng.split("zu-eps").normal((batch_size, cfg.z_u_dim))


def _mean(rows: Tensor, n: int) -> Tensor:
    return rows.sum() * (1.0 / n)


def elbo_supervised(params, cfg: ModelConfig, batch: ObjectiveBatch,
                    z_s_value, rng: Rng, train: bool = False,
                    eps: np.ndarray | None = None) -> LossBreakdown:
    """Mean supervised bound L_s over the batch.

    Per utterance: E_q[log p(x|y,z_u,z_s)] + log p(z_s) - KL(q(z_u)||p).
    `z_s_value` is the observed control (class indices, one-hot rows, or
    continuous rows).  `eps` overrides the z_u noise draw.
    """
    text, summ, spk_e, trunk = _prepare(params, cfg, batch, rng, train)
    zs_value = _coerce_zs(cfg, z_s_value, text.data.dtype)
    if cfg.z_s.kind == "discrete":
        zs_log_prior = -math.log(cfg.z_s.size)
    else:
        zs_log_prior = std_normal_log_density_rows(zs_value)
    if eps is None:
        eps = _zu_eps(cfg, batch.size, rng)
    p = _conditional_pass(params, cfg, batch, text, summ, spk_e, trunk,
                          zs_value, zs_log_prior, eps,
                          rng.split("decode") if train else None, train,
                          source="observed")
    rows = p.recon - p.kl + p.zs
    total = _mean(rows, batch.size)
    zs_rows = p.zs.data if isinstance(p.zs, Tensor) else np.full(batch.size, p.zs)
    return LossBreakdown(
        recon=float(p.recon.data.mean()),
        kl_zu=float(p.kl.data.mean()),
        zs_term=float(zs_rows.mean()),
        cls=0.0,
        entropy=0.0,
        total=total,
        row_totals=rows.data.copy(),
    )


def _entropy_rows(logits: Tensor) -> tuple[Tensor, Tensor]:
    """Class probabilities (B, K) and per-row entropies (B,) from logits."""
    probs = softmax(logits, axis=1)
    logp = logits - logsumexp(logits, axis=1).repeat_last(logits.shape[1])
    ent = (probs * logp).sum(axis=1) * -1.0
    return probs, ent


def elbo_unsupervised_discrete(params, cfg: ModelConfig, batch: ObjectiveBatch,
                               rng: Rng, train: bool = False) -> LossBreakdown:
    """Mean unsupervised bound L_u: sum_k q(k) L_s(k) + H(q).

    Every class is enumerated with its own z_u posterior; the same z_u
    noise is reused across classes.  Equals a loop of `elbo_supervised`
    calls (same batch, shared eps) weighted by q and summed in class
    order, then offset by the entropy.
    """
    if cfg.z_s.kind != "discrete":
        raise ValueError("elbo_unsupervised_discrete needs a discrete z_s spec")
    k_classes = cfg.z_s.size
    text, summ, spk_e, trunk = _prepare(params, cfg, batch, rng, train)
    qzs = posterior_zs(params, cfg, batch.frames, batch.frame_mask, summ,
                       spk_e, train=train, trunk=trunk)
    probs, ent = _entropy_rows(qzs.logits)
    eps = _zu_eps(cfg, batch.size, rng)
    log_prior = -math.log(k_classes)

    dtype = text.data.dtype
    weighted_recon = np.zeros(batch.size)
    weighted_kl = np.zeros(batch.size)
    rows = None
    for k in range(k_classes):
        zs_value = Tensor(one_hot(np.full(batch.size, k), k_classes, dtype=dtype))
        p = _conditional_pass(params, cfg, batch, text, summ, spk_e, trunk,
                              zs_value, log_prior, eps,
                              rng.split("decode", k) if train else None, train,
                              source=f"enumerated({k})")
        ls_rows = p.recon - p.kl + p.zs
        term = probs[:, k] * ls_rows
        rows = term if rows is None else rows + term
        weighted_recon += probs.data[:, k] * p.recon.data
        weighted_kl += probs.data[:, k] * p.kl.data
    rows = rows + ent
    total = _mean(rows, batch.size)
    ent_mean = float(ent.data.mean())
    return LossBreakdown(
        recon=float(weighted_recon.mean()),
        kl_zu=float(weighted_kl.mean()),
        zs_term=float((probs.data.sum(axis=1) * log_prior).mean()) + ent_mean,
        cls=0.0,
        entropy=ent_mean,
        total=total,
        row_totals=rows.data.copy(),
    )


def elbo_unsupervised_continuous(params, cfg: ModelConfig,
                                 batch: ObjectiveBatch, rng: Rng,
                                 train: bool = False) -> LossBreakdown:
    """Mean unsupervised bound with a sampled continuous z_s.

    z_s ~ q(z_s|x,y) by reparameterization, then the supervised-style
    terms with log p(z_s) - log q(z_s) in place of the entropy sum.
    """
    if cfg.z_s.kind != "continuous":
        raise ValueError("elbo_unsupervised_continuous needs a continuous z_s spec")
    text, summ, spk_e, trunk = _prepare(params, cfg, batch, rng, train)
    qzs = posterior_zs(params, cfg, batch.frames, batch.frame_mask, summ,
                       spk_e, train=train, trunk=trunk)
    lv_s = clamp_log_var(qzs.log_var)
    eps_s = rng.split("zs-eps").normal(qzs.mean.shape).astype(text.data.dtype)
    zs_value = qzs.mean + (lv_s * 0.5).exp() * Tensor(eps_s)
    log_p = std_normal_log_density_rows(zs_value)
    log_q = gaussian_log_density_rows(zs_value, qzs.mean, lv_s)
    eps = _zu_eps(cfg, batch.size, rng)
    p = _conditional_pass(params, cfg, batch, text, summ, spk_e, trunk,
                          zs_value, log_p - log_q, eps,
                          rng.split("decode") if train else None, train,
                          source="sampled")
    rows = p.recon - p.kl + p.zs
    total = _mean(rows, batch.size)
    return LossBreakdown(
        recon=float(p.recon.data.mean()),
        kl_zu=float(p.kl.data.mean()),
        zs_term=float(p.zs.data.mean()),
        cls=0.0,
        entropy=float(-log_q.data.mean()),
        total=total,
        row_totals=rows.data.copy(),
    )


def objective_total(params, cfg: ModelConfig, batch: ObjectiveBatch, rng: Rng,
                    alpha: float = 0.0, gamma: float = 1.0,
                    train: bool = False) -> LossBreakdown:
    """Batch objective: mean over utterances of the per-row contribution.

    Supervised rows contribute gamma * L_s + alpha * log q(z_s_obs|x,y);
    unsupervised rows contribute L_u.  Supervised and unsupervised rows
    are processed as separate sub-batches (each with its own derived rng
    stream, tags "sup" and "unsup").
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if gamma < 1:
        raise ValueError(f"gamma must be at least 1, got {gamma}")
    n = batch.size
    if batch.sup_mask is None:
        sup_mask = np.zeros(n, dtype=bool)
    else:
        sup_mask = np.asarray(batch.sup_mask, dtype=bool)
        if sup_mask.shape != (n,):
            raise ValueError(f"sup_mask must be ({n},), got {sup_mask.shape}")
    if sup_mask.any() and batch.labels is None:
        raise ValueError("supervised rows need labels")

    sup_idx = np.flatnonzero(sup_mask)
    unsup_idx = np.flatnonzero(~sup_mask)
    row_totals = np.zeros(n)
    total = None
    recon = kl_zu = zs_term = cls = 0.0
    entropy = 0.0

    if sup_idx.size:
        sub = batch.subset(sup_idx)
        sup_rng = rng.split("sup")
        part, logq_rows = _supervised_with_cls(params, cfg, sub, sup_rng,
                                               train, alpha)
        rows = part.recon - part.kl + part.zs
        contrib = rows * gamma
        if logq_rows is not None:
            contrib = contrib + logq_rows * alpha
            cls = alpha * float(logq_rows.data.sum()) / n
        t = contrib.sum() * (1.0 / n)
        total = t
        row_totals[sup_idx] = contrib.data
        recon += gamma * float(part.recon.data.sum()) / n
        kl_zu += gamma * float(part.kl.data.sum()) / n
        zs_rows = part.zs.data if isinstance(part.zs, Tensor) else np.full(sub.size, part.zs)
        zs_term += gamma * float(zs_rows.sum()) / n

    if unsup_idx.size:
        sub = batch.subset(unsup_idx)
        unsup_rng = rng.split("unsup")
        if cfg.z_s.kind == "discrete":
            bd = elbo_unsupervised_discrete(params, cfg, sub, unsup_rng, train)
        else:
            bd = elbo_unsupervised_continuous(params, cfg, sub, unsup_rng, train)
        # bd.total is a mean over the sub-batch; rescale to the full batch
        t = bd.total * (sub.size / n)
        total = t if total is None else total + t
        row_totals[unsup_idx] = bd.row_totals
        scale = sub.size / n
        recon += bd.recon * scale
        kl_zu += bd.kl_zu * scale
        zs_term += bd.zs_term * scale
        entropy = bd.entropy

    if total is None:
        raise ValueError("objective_total needs a nonempty batch")
    return LossBreakdown(
        recon=recon,
        kl_zu=kl_zu,
        zs_term=zs_term,
        cls=cls,
        entropy=entropy,
        total=total,
        row_totals=row_totals,
    )


def _supervised_with_cls(params, cfg: ModelConfig, batch: ObjectiveBatch,
                         rng: Rng, train: bool, alpha: float):
    """Supervised pass over a sub-batch, plus the classifier term rows.

    Mirrors `elbo_supervised` (same rng tags) and additionally evaluates
    log q(z_s_obs|x,y) when alpha > 0.
    """
    text, summ, spk_e, trunk = _prepare(params, cfg, batch, rng, train)
    zs_value = _coerce_zs(cfg, batch.labels, text.data.dtype)
    if cfg.z_s.kind == "discrete":
        zs_log_prior = -math.log(cfg.z_s.size)
    else:
        zs_log_prior = std_normal_log_density_rows(zs_value)
    eps = _zu_eps(cfg, batch.size, rng)
    p = _conditional_pass(params, cfg, batch, text, summ, spk_e, trunk,
                          zs_value, zs_log_prior, eps,
                          rng.split("decode") if train else None, train,
                          source="observed")
    logq_rows = None
    if alpha > 0:
        qzs = posterior_zs(params, cfg, batch.frames, batch.frame_mask, summ,
                           spk_e, train=train, trunk=trunk)
        if cfg.z_s.kind == "discrete":
            logp = qzs.logits - logsumexp(qzs.logits, axis=1).repeat_last(cfg.z_s.size)
            logq_rows = (logp * zs_value).sum(axis=1)
        else:
            logq_rows = gaussian_log_density_rows(zs_value, qzs.mean,
                                                  clamp_log_var(qzs.log_var))
    return p, logq_rows
