"""Slow, independent reference implementations used by the test suite.

Everything in here trades speed for obviousness: entrywise finite
differences, explicit loops, exhaustive recursion.  Production code must
never import this module; the point is that these answers are computed a
different way than the library computes them.
"""

from __future__ import annotations

import numpy as np


def fd_grad(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Entrywise central-difference gradient of scalar f at x (float64)."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(x))
        flat[i] = orig - h
        fm = float(f(x))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def conv1d_loops(x: np.ndarray, w: np.ndarray, b, stride: int, padding: int) -> np.ndarray:
    """conv1d by four explicit loops; x (B,T,Cin), w (K,Cin,Cout)."""
    bsz, t_in, c_in = x.shape
    k, _, c_out = w.shape
    xp = np.pad(x, ((0, 0), (padding, padding), (0, 0)))
    t_out = (xp.shape[1] - k) // stride + 1
    out = np.zeros((bsz, t_out, c_out), dtype=x.dtype)
    for n in range(bsz):
        for t in range(t_out):
            for o in range(c_out):
                acc = 0.0
                for j in range(k):
                    acc += float(xp[n, t * stride + j] @ w[j, :, o])
                out[n, t, o] = acc
    if b is not None:
        out += b
    return out


def conv2d_loops(x, w, b, stride, padding):
    """conv2d by explicit loops; x (B,H,W,Cin), w (KH,KW,Cin,Cout)."""
    bsz, h_in, w_in, c_in = x.shape
    kh, kw, _, c_out = w.shape
    sh, sw = stride
    ph, pw = padding
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    h_out = (xp.shape[1] - kh) // sh + 1
    w_out = (xp.shape[2] - kw) // sw + 1
    out = np.zeros((bsz, h_out, w_out, c_out), dtype=x.dtype)
    for n in range(bsz):
        for i in range(h_out):
            for j in range(w_out):
                patch = xp[n, i * sh: i * sh + kh, j * sw: j * sw + kw]
                for o in range(c_out):
                    out[n, i, j, o] = float((patch * w[..., o]).sum())
    if b is not None:
        out += b
    return out


def maxpool1d_same_loops(x: np.ndarray, width: int) -> np.ndarray:
    bsz, t_in, c = x.shape
    left = (width - 1) // 2
    out = np.empty_like(x)
    for n in range(bsz):
        for t in range(t_in):
            lo = max(0, t - left)
            hi = min(t_in, t - left + width)
            out[n, t] = x[n, lo:hi].max(axis=0)
    return out


def dct2_loops(x: np.ndarray) -> np.ndarray:
    """Type-II DCT of the last axis by the defining double sum, no scaling."""
    n = x.shape[-1]
    basis = np.cos(np.pi / n * (np.arange(n)[:, None] + 0.5) * np.arange(n)[None, :])
    return 2.0 * x @ basis


def dtw_brute(cost: np.ndarray, step_penalty: float) -> float:
    """Exhaustive alignment over {diag free, right/down +penalty}.

    Enumerates every monotonic path anchored at both corners, picks the
    one with minimum total cost (shorter path on ties), and returns that
    path's cost divided by its length.  Only viable for tiny matrices.
    """
    n, m = cost.shape
    all_paths: list[tuple[float, int]] = []

    def walk(i: int, j: int, acc: float, steps: int) -> None:
        acc += float(cost[i, j])
        steps += 1
        if i == n - 1 and j == m - 1:
            all_paths.append((acc, steps))
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc, steps)
        if i + 1 < n:
            walk(i + 1, j, acc + step_penalty, steps)
        if j + 1 < m:
            walk(i, j + 1, acc + step_penalty, steps)

    walk(0, 0, 0.0, 0)
    best_cost, best_len = min(all_paths)
    return best_cost / best_len


def gaussian_kl_mc(mu_q, logvar_q, mu_p, logvar_p, draws: np.ndarray) -> tuple[float, float]:
    """Monte Carlo KL(q||p) for diagonal Gaussians from standard-normal draws.

    Returns (estimate, standard error of the estimate).
    """
    mu_q = np.asarray(mu_q, dtype=np.float64)
    logvar_q = np.asarray(logvar_q, dtype=np.float64)
    mu_p = np.asarray(mu_p, dtype=np.float64)
    logvar_p = np.asarray(logvar_p, dtype=np.float64)
    z = mu_q + np.exp(0.5 * logvar_q) * draws
    log_q = -0.5 * (((z - mu_q) ** 2) * np.exp(-logvar_q) + logvar_q + np.log(2 * np.pi)).sum(axis=-1)
    log_p = -0.5 * (((z - mu_p) ** 2) * np.exp(-logvar_p) + logvar_p + np.log(2 * np.pi)).sum(axis=-1)
    diff = log_q - log_p
    return float(diff.mean()), float(diff.std(ddof=1) / np.sqrt(diff.size))
