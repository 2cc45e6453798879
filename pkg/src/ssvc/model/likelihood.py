"""Laplace output likelihood for predicted mel frames."""

from __future__ import annotations

import math

import numpy as np

from ..autodiff import ShapeError, Tensor


def _laplace_elements(
    x, mean: Tensor, scale: float, frame_mask: np.ndarray | None
) -> Tensor:
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if not isinstance(x, Tensor):
        x = Tensor(np.asarray(x, dtype=mean.data.dtype))
    if x.shape != mean.shape:
        raise ShapeError(f"laplace_log_likelihood: x {x.shape} vs mean {mean.shape}")
    elem = (x - mean).abs() * (-1.0 / scale) - math.log(2.0 * scale)
    if frame_mask is not None:
        if frame_mask.shape != x.shape[:-1]:
            raise ShapeError(
                f"frame_mask {frame_mask.shape} does not match frames {x.shape[:-1]}"
            )
        elem = elem * Tensor(frame_mask.astype(x.data.dtype)).repeat_last(x.shape[-1])
    return elem


def laplace_log_likelihood(
    x, mean: Tensor, scale: float = 1.0, frame_mask: np.ndarray | None = None
) -> Tensor:
    """Sum of log densities of an isotropic Laplace with the given means.

    Per element the contribution is -|x - mean| / scale - ln(2 * scale);
    `frame_mask` (B, T) zeroes out padded frames including their
    normalizer term, so padding never influences the value.
    """
    return _laplace_elements(x, mean, scale, frame_mask).sum()


def laplace_log_likelihood_rows(
    x, mean: Tensor, scale: float = 1.0, frame_mask: np.ndarray | None = None
) -> Tensor:
    """Per-utterance Laplace log likelihood, shape (B,).

    Same elementwise terms as `laplace_log_likelihood` but reduced only
    over time and mel axes, so each utterance keeps its own total.
    """
    elem = _laplace_elements(x, mean, scale, frame_mask)
    if elem.ndim != 3:
        raise ShapeError(
            f"per-utterance reduction needs (B, T, n_mels) frames, got {elem.shape}"
        )
    return elem.sum(axis=(1, 2))
