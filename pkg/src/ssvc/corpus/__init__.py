"""Synthetic corpus with known control factors and partial supervision."""

from .generate import SUPERVISED_ATTRIBUTES, GenerationConfig, generate_corpus
from .sscp import load_corpus, save_corpus
from .synthesis import (
    SAMPLE_RATE,
    generate_utterance,
    measured_rate,
    render_audio,
    token_resonances,
)
from .types import (
    CLASS_TEMPLATES_K3,
    CLASS_TEMPLATES_K6,
    SPEAKER_BASE_F0,
    VOCAB_SIZE,
    ClassTemplate,
    Corpus,
    FactorSpec,
    Utterance,
    class_templates,
)

__all__ = [
    "CLASS_TEMPLATES_K3",
    "CLASS_TEMPLATES_K6",
    "ClassTemplate",
    "Corpus",
    "FactorSpec",
    "GenerationConfig",
    "SAMPLE_RATE",
    "SPEAKER_BASE_F0",
    "SUPERVISED_ATTRIBUTES",
    "Utterance",
    "VOCAB_SIZE",
    "class_templates",
    "generate_corpus",
    "generate_utterance",
    "load_corpus",
    "measured_rate",
    "render_audio",
    "save_corpus",
    "token_resonances",
]
