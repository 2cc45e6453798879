"""Corpus data model: control factors, utterances, the corpus container.

Every utterance carries its full generating factors in `truth`; training
code must never read them.  Supervision is expressed solely through the
optional label fields, which are populated only on the masked subset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..dsp import MelSpectrogram, WhitenStats


@dataclass(frozen=True)
class ClassTemplate:
    name: str
    shape: str        # "rise" | "fall" | "peak"
    rho: float        # share of F0 variance carried by the slow contour
    vibrato_hz: float


# Discrete affect classes are contour shape crossed with how the F0
# variance splits between slow contour and vibrato ("calm" puts most of
# it in the contour, "lively" in the vibrato, which also runs faster).
CLASS_TEMPLATES_K6 = (
    ClassTemplate("rise-calm", "rise", 0.75, 2.5),
    ClassTemplate("rise-lively", "rise", 0.25, 4.0),
    ClassTemplate("fall-calm", "fall", 0.75, 2.5),
    ClassTemplate("fall-lively", "fall", 0.25, 4.0),
    ClassTemplate("peak-calm", "peak", 0.75, 2.5),
    ClassTemplate("peak-lively", "peak", 0.25, 4.0),
)

CLASS_TEMPLATES_K3 = (
    ClassTemplate("rise", "rise", 0.5, 3.0),
    ClassTemplate("fall", "fall", 0.5, 3.0),
    ClassTemplate("peak", "peak", 0.5, 3.0),
)


def class_templates(n_classes: int) -> tuple[ClassTemplate, ...]:
    if n_classes == 6:
        return CLASS_TEMPLATES_K6
    if n_classes == 3:
        return CLASS_TEMPLATES_K3
    raise ValueError(f"no class template table for K={n_classes}; supported: 3, 6")


SPEAKER_BASE_F0 = (130.0, 175.0, 220.0, 270.0)

VOCAB_SIZE = 32


@dataclass
class FactorSpec:
    class_id: int
    rate: float          # syllables per second
    f0_var: float        # Hz, std of the voiced F0 contour
    speaker_id: int

    def validate(self, n_classes: int) -> None:
        if not 0 <= self.class_id < n_classes:
            raise ValueError(f"class_id {self.class_id} outside [0, {n_classes})")
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.f0_var < 0:
            raise ValueError(f"f0_var must be nonnegative, got {self.f0_var}")
        if not 0 <= self.speaker_id < len(SPEAKER_BASE_F0):
            raise ValueError(f"speaker_id {self.speaker_id} outside [0, {len(SPEAKER_BASE_F0)})")


@dataclass
class Utterance:
    tokens: np.ndarray               # int array of pseudo-phoneme ids < VOCAB_SIZE
    mel: MelSpectrogram
    syllable_count: int
    duration_s: float
    speaker_id: int
    truth: FactorSpec                # generator ground truth, evaluation only
    label_discrete: Optional[int] = None
    label_continuous: Optional[float] = None   # whitened scalar
    measured_f0_var: Optional[float] = None    # raw Hz, cached measurement

    @property
    def has_label(self) -> bool:
        return self.label_discrete is not None or self.label_continuous is not None


@dataclass
class Corpus:
    utterances: list[Utterance]
    whiten_stats: Optional[WhitenStats]
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    meta: dict = field(default_factory=dict)

    def train(self) -> list[Utterance]:
        return [self.utterances[i] for i in self.train_idx]

    def val(self) -> list[Utterance]:
        return [self.utterances[i] for i in self.val_idx]

    def test(self) -> list[Utterance]:
        return [self.utterances[i] for i in self.test_idx]

    @property
    def n_classes(self) -> int:
        return int(self.meta["n_classes"])
