"""Training, evaluation, and the pieces behind the command line."""

from .adam import adam_step, init_adam
from .batches import batch_from_utterances, epoch_chunks
from .checks import GRADCHECK_TOL, micro_gradcheck
from .classifier import ClassifierResult, classify_mels, train_classifier
from .config import TrainConfig, TrainResult
from .evaluate import EvalReport, evaluate
from .loop import CSV_HEADER, collapse_diagnostic, train
from .sweep import DEFAULT_FRACTIONS, run_sweep
from .synthesize import coerce_control, prior_z_u, synthesize, synthesize_batch

__all__ = [
    "CSV_HEADER",
    "ClassifierResult",
    "DEFAULT_FRACTIONS",
    "EvalReport",
    "GRADCHECK_TOL",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "batch_from_utterances",
    "classify_mels",
    "coerce_control",
    "collapse_diagnostic",
    "epoch_chunks",
    "evaluate",
    "init_adam",
    "micro_gradcheck",
    "prior_z_u",
    "run_sweep",
    "synthesize",
    "synthesize_batch",
    "train",
    "train_classifier",
]
