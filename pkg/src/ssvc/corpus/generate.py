"""Whole-corpus generation with stratified partial supervision."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..autodiff import Rng, derive_seed
from ..dsp import MelConfig, fit_whitening, apply_whitening
from .synthesis import generate_utterance, measured_rate
from .types import SPEAKER_BASE_F0, VOCAB_SIZE, Corpus, FactorSpec, Utterance

SUPERVISED_ATTRIBUTES = ("class", "rate", "f0_var")


@dataclass
class GenerationConfig:
    n_train: int = 2000
    n_classes: int = 6
    supervision_fraction: float = 0.1
    supervised_attribute: str = "class"
    rate_range: tuple[float, float] = (2.0, 6.0)
    f0_var_range: tuple[float, float] = (5.0, 50.0)
    target_duration_range: tuple[float, float] = (0.8, 1.6)
    min_tokens: int = 2
    max_tokens: int = 10
    val_fraction: float = 0.05
    test_fraction: float = 0.05

    def validate(self) -> None:
        if not 0.0 <= self.supervision_fraction <= 1.0:
            raise ValueError(f"supervision_fraction {self.supervision_fraction} outside [0, 1]")
        if self.supervised_attribute not in SUPERVISED_ATTRIBUTES:
            raise ValueError(
                f"supervised_attribute {self.supervised_attribute!r} not one of {SUPERVISED_ATTRIBUTES}"
            )
        if self.n_train < 1:
            raise ValueError("n_train must be positive")
        if self.n_classes not in (3, 6):
            raise ValueError(f"n_classes must be 3 or 6, got {self.n_classes}")


def _draw_factors(rng: Rng, cfg: GenerationConfig) -> tuple[FactorSpec, np.ndarray]:
    class_id = int(rng.integers(cfg.n_classes))
    rate = cfg.rate_range[0] + (cfg.rate_range[1] - cfg.rate_range[0]) * rng.uniform()
    f0_var = cfg.f0_var_range[0] + (cfg.f0_var_range[1] - cfg.f0_var_range[0]) * rng.uniform()
    speaker = int(rng.integers(len(SPEAKER_BASE_F0)))
    lo, hi = cfg.target_duration_range
    target = lo + (hi - lo) * rng.uniform()
    n_tokens = int(np.clip(round(rate * target), cfg.min_tokens, cfg.max_tokens))
    tokens = rng.integers(VOCAB_SIZE, n_tokens)
    return FactorSpec(class_id, float(rate), float(f0_var), speaker), tokens


def _stratified_mask(train_utts: list[Utterance], n_supervised: int, n_classes: int, rng: Rng) -> np.ndarray:
    """Pick supervised indices spread as evenly as possible across classes."""
    n = len(train_utts)
    chosen: list[int] = []
    by_class = [[] for _ in range(n_classes)]
    for i, u in enumerate(train_utts):
        by_class[u.truth.class_id].append(i)
    base, extra = divmod(n_supervised, n_classes)
    order = rng.permutation(n_classes)
    for rank, k in enumerate(order):
        want = base + (1 if rank < extra else 0)
        pool = by_class[int(k)]
        perm = rng.permutation(len(pool))
        chosen.extend(pool[int(j)] for j in perm[:want])
    # classes short on members leave a deficit; fill from the leftovers
    if len(chosen) < n_supervised:
        taken = set(chosen)
        leftover = [i for i in range(n) if i not in taken]
        perm = rng.permutation(len(leftover))
        chosen.extend(leftover[int(j)] for j in perm[: n_supervised - len(chosen)])
    mask = np.zeros(n, dtype=bool)
    mask[chosen[:n_supervised]] = True
    return mask


def generate_corpus(cfg: GenerationConfig, rng: Rng, mel_cfg: MelConfig = MelConfig()) -> Corpus:
    cfg.validate()
    n_total = cfg.n_train + int(round(cfg.val_fraction * cfg.n_train)) + int(
        round(cfg.test_fraction * cfg.n_train)
    )
    utts = []
    for i in range(n_total):
        utt_rng = Rng(derive_seed(rng.seed, "utterance", i))
        factors, tokens = _draw_factors(utt_rng, cfg)
        utts.append(generate_utterance(utt_rng, factors, tokens, cfg.n_classes, mel_cfg))

    order = rng.permutation(n_total)
    train_idx = order[: cfg.n_train]
    n_val = int(round(cfg.val_fraction * cfg.n_train))
    val_idx = order[cfg.n_train: cfg.n_train + n_val]
    test_idx = order[cfg.n_train + n_val:]

    train_utts = [utts[i] for i in train_idx]
    n_supervised = int(np.floor(cfg.supervision_fraction * cfg.n_train))
    mask = _stratified_mask(train_utts, n_supervised, cfg.n_classes, rng)

    whiten_stats = None
    if cfg.supervised_attribute == "class":
        for u, m in zip(train_utts, mask):
            if m:
                u.label_discrete = u.truth.class_id
    else:
        raws = np.array([_raw_label(u, cfg.supervised_attribute) for u in train_utts])
        whiten_stats = fit_whitening(raws)
        whitened = apply_whitening(whiten_stats, raws)
        for u, m, z in zip(train_utts, mask, whitened):
            if m:
                u.label_continuous = float(z)

    meta = {
        "config": asdict(cfg),
        "seed": rng.seed,
        "n_classes": cfg.n_classes,
        "supervised_attribute": cfg.supervised_attribute,
        "n_supervised": int(mask.sum()),
    }
    return Corpus(utts, whiten_stats, train_idx, val_idx, test_idx, meta)


def _raw_label(utt: Utterance, attribute: str) -> float:
    if attribute == "rate":
        return measured_rate(utt)
    if attribute == "f0_var":
        if utt.measured_f0_var is None:
            raise ValueError("utterance had no voiced frames; cannot label f0_var")
        return utt.measured_f0_var
    raise ValueError(f"unknown attribute {attribute!r}")
