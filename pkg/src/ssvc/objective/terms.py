"""Priors, divergences, and reparameterized sampling.

Everything here is a small closed-form expression; the heavy lifting
(decoding, posterior networks) lives in ssvc.model and is stitched
together with these terms in ssvc.objective.bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..autodiff import Rng, Tensor
from ..model import LatentSpec, PosteriorOut

LOG_TWO_PI = math.log(2.0 * math.pi)

# Guard for exp(log_var); posteriors are free to emit anything, the
# bound only ever exponentiates the clamped value.
LOG_VAR_MIN = -20.0
LOG_VAR_MAX = 20.0


@dataclass
class LatentSample:
    """One concrete latent assignment used by a bound evaluation.

    `eps` is the noise that produced `z_u` (kept so a run can be
    replayed exactly); `source` records how z_s was chosen: "observed",
    "sampled", or "enumerated(k)".
    """

    z_u: Tensor
    eps: np.ndarray
    z_s: Tensor | None = None
    source: str = "sampled"


def _require_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


def clamp_log_var(log_var: Tensor) -> Tensor:
    return log_var.clip(LOG_VAR_MIN, LOG_VAR_MAX)


def kl_diag_gaussian_rows(mean: Tensor, log_var: Tensor) -> Tensor:
    """KL(N(mean, diag exp(log_var)) || N(0, I)) for each row of (B, d)."""
    _require_finite("mean", mean.data)
    _require_finite("log_var", log_var.data)
    elem = (log_var.exp() + mean.square() - 1.0 - log_var) * 0.5
    return elem.sum(axis=1)


def kl_diag_gaussian_standard(mean, log_var) -> Tensor:
    """Total KL against the standard normal prior, summed over all entries.

    Accepts Tensors or arrays; the closed form per entry is
    (exp(lv) + m^2 - 1 - lv) / 2.
    """
    if not isinstance(mean, Tensor):
        mean = Tensor(np.asarray(mean, dtype=np.float64))
    if not isinstance(log_var, Tensor):
        log_var = Tensor(np.asarray(log_var, dtype=mean.data.dtype))
    _require_finite("mean", mean.data)
    _require_finite("log_var", log_var.data)
    elem = (log_var.exp() + mean.square() - 1.0 - log_var) * 0.5
    return elem.sum()


def categorical_entropy(probs) -> float:
    """Entropy of a probability vector in nats, with 0*ln 0 taken as 0."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"probs must be a vector, got shape {p.shape}")
    if p.min() < 0:
        raise ValueError(f"probabilities must be nonnegative, min is {p.min()}")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"probabilities must sum to 1, got {p.sum()}")
    nonzero = p > 0
    return float(-(p[nonzero] * np.log(p[nonzero])).sum())


def _check_one_hot(z: np.ndarray, k: int) -> None:
    if z.shape[-1] != k:
        raise ValueError(f"one-hot z_s must have {k} entries, got {z.shape[-1]}")
    flat = z.reshape(-1, k)
    on = np.abs(flat - 1.0) < 1e-9
    off = np.abs(flat) < 1e-9
    if not np.all(on | off) or not np.all(on.sum(axis=1) == 1):
        raise ValueError("z_s must be one-hot rows (a single 1, rest 0)")


def log_prior_zs(spec: LatentSpec, z_s):
    """Log prior density or mass of a z_s value.

    Discrete: uniform over K classes, so -ln K for any valid one-hot
    (returned as a float).  Continuous: standard normal log density,
    summed over the dimensions; returns a Tensor when given one so the
    prior term can carry gradient to a sampled z_s.
    """
    if spec.kind == "discrete":
        data = z_s.data if isinstance(z_s, Tensor) else np.asarray(z_s)
        _check_one_hot(data, spec.size)
        return -math.log(spec.size)
    if isinstance(z_s, Tensor):
        return (z_s.square() + LOG_TWO_PI).sum() * -0.5
    z = np.asarray(z_s, dtype=np.float64)
    _require_finite("z_s", z)
    return float(-0.5 * (z ** 2 + LOG_TWO_PI).sum())


def std_normal_log_density_rows(z: Tensor) -> Tensor:
    """Row sums of the standard normal log density, (B, d) -> (B,)."""
    return (z.square() + LOG_TWO_PI).sum(axis=1) * -0.5


def gaussian_log_density_rows(z, mean: Tensor, log_var: Tensor) -> Tensor:
    """Diagonal Gaussian log density per row: (B, d) inputs -> (B,)."""
    if not isinstance(z, Tensor):
        z = Tensor(np.asarray(z, dtype=mean.data.dtype))
    elem = (z - mean).square() * (-log_var).exp() + log_var + LOG_TWO_PI
    return elem.sum(axis=1) * -0.5


def reparameterize(post: PosteriorOut, rng: Rng | None = None,
                   eps: np.ndarray | None = None) -> LatentSample:
    """Draw z = mean + exp(log_var / 2) * eps with log_var clamped.

    Either an rng (fresh noise) or an explicit eps array must be given;
    the noise used is recorded on the returned sample.
    """
    if post.mean is None or post.log_var is None:
        raise ValueError("reparameterize needs a Gaussian posterior")
    if eps is None:
        if rng is None:
            raise ValueError("reparameterize needs an rng or explicit eps")
        eps = rng.normal(post.mean.shape).astype(post.mean.data.dtype)
    else:
        eps = np.asarray(eps, dtype=post.mean.data.dtype)
        if eps.shape != post.mean.shape:
            raise ValueError(f"eps shape {eps.shape} != mean shape {post.mean.shape}")
    sigma = (clamp_log_var(post.log_var) * 0.5).exp()
    z = post.mean + sigma * Tensor(eps)
    return LatentSample(z_u=z, eps=eps, source="sampled")
