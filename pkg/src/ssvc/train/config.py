"""Training hyperparameters and the result record returned by runs."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings.

    The paper-scale protocol (batch 256, 300k steps) is far outside a
    single CPU; the defaults here are the desk-scale analogue.  The
    supervision fraction lives with the corpus (labels are attached at
    generation time); the copy here is informational and is recorded in
    logs and sweep output.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 16
    max_steps: int = 5000
    alpha: float = 1.0
    gamma: float = 100.0
    supervision_fraction: Optional[float] = None
    seed: int = 0
    precision: str = "f32"
    checkpoint_every: int = 1000
    eval_every: int = 50
    probe_size: int = 16
    max_frames: int = 400

    def validate(self) -> None:
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 8:
            raise ValueError(
                f"batch_size must be at least 8 (batchnorm needs a usable "
                f"batch after splitting), got {self.batch_size}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.precision not in ("f32", "f64"):
            raise ValueError(f"precision must be 'f32' or 'f64', got {self.precision!r}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.gamma < 1:
            raise ValueError(f"gamma must be at least 1, got {self.gamma}")
        if self.checkpoint_every < 1 or self.eval_every < 1:
            raise ValueError("checkpoint_every and eval_every must be at least 1")
        if self.probe_size < 2:
            raise ValueError("probe_size must be at least 2")

    @property
    def dtype_name(self) -> str:
        return "float32" if self.precision == "f32" else "float64"


@dataclass
class TrainResult:
    checkpoint_path: Path
    metrics_path: Path
    steps_run: int
    supervised_count: int
    aux: dict = field(default_factory=dict)
