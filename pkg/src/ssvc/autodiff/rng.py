"""Deterministic pseudo-randomness for the whole stack.

The generator is 64 interleaved lanes of xorshift128+ (Vigna 2014,
shift triple 23/17/26), lane states seeded from a splitmix64 stream.
Each request produces whole 64-value rounds and keeps the first n values
in lane-interleaved order; leftovers are discarded, so the value at a
given position depends only on the seed and the sequence of request
sizes.  The platform default PRNG is never used anywhere.

Normals come from Box-Muller on consecutive uniform halves.  All draws
are float64 internally; cast at the point of use.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64
_MASK64 = _U64(0xFFFFFFFFFFFFFFFF)

_LANES = 64

# splitmix64 constants
_SM_GAMMA = _U64(0x9E3779B97F4A7C15)
_SM_M1 = _U64(0xBF58476D1CE4E5B9)
_SM_M2 = _U64(0x94D049BB133111EB)

_TWO_NEG_53 = float(2.0**-53)


def _splitmix64(state: np.uint64) -> tuple[np.uint64, np.uint64]:
    """One splitmix64 step: returns (new_state, output)."""
    state = _U64(int(state) + int(_SM_GAMMA) & 0xFFFFFFFFFFFFFFFF)
    z = state
    z = _U64((int(z) ^ (int(z) >> 30)) * int(_SM_M1) & 0xFFFFFFFFFFFFFFFF)
    z = _U64((int(z) ^ (int(z) >> 27)) * int(_SM_M2) & 0xFFFFFFFFFFFFFFFF)
    z = _U64(int(z) ^ (int(z) >> 31))
    return state, z


def _fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of a string, for deriving tagged sub-seeds."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def derive_seed(seed: int, *tags: int | str) -> int:
    """Mix a base seed with tags (ints or strings) into a new 64-bit seed.

    Used for per-utterance, per-step and per-purpose sub-streams so that
    independent components never share a draw sequence.
    """
    state = _U64(seed & 0xFFFFFFFFFFFFFFFF)
    out = _U64(0)
    for tag in tags:
        value = _fnv1a64(tag) if isinstance(tag, str) else tag & 0xFFFFFFFFFFFFFFFF
        state = _U64(int(state) ^ value)
        state, out = _splitmix64(state)
    if not tags:
        state, out = _splitmix64(state)
    return int(out)


class Rng:
    """Seeded xorshift128+ generator with 64 interleaved lanes.

    Same seed gives a bit-identical draw sequence for the same sequence
    of requests, independent of platform.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        state = _U64(self.seed)
        raw = np.empty(2 * _LANES, dtype=np.uint64)
        for i in range(2 * _LANES):
            state, out = _splitmix64(state)
            raw[i] = out
        # xorshift128+ requires a nonzero state per lane; splitmix output
        # is zero with probability 2^-64 per word, force nonzero anyway.
        raw[raw == 0] = _U64(0x1)
        self._s0 = raw[:_LANES].copy()
        self._s1 = raw[_LANES:].copy()

    def _raw_rounds(self, rounds: int) -> np.ndarray:
        """Generate `rounds` rounds of 64 uint64 values, interleaved by lane."""
        out = np.empty((rounds, _LANES), dtype=np.uint64)
        s0, s1 = self._s0, self._s1
        with np.errstate(over="ignore"):
            for r in range(rounds):
                x = s0
                y = s1
                s0 = y
                x = x ^ (x << _U64(23))
                s1 = x ^ y ^ (x >> _U64(17)) ^ (y >> _U64(26))
                out[r] = s1 + y
        self._s0, self._s1 = s0, s1
        return out.reshape(-1)

    def uniform(self, shape=()) -> np.ndarray:
        """Uniform draws in [0, 1) as float64 with the given shape."""
        shape = _as_shape(shape)
        n = int(np.prod(shape)) if shape else 1
        rounds = max(1, -(-n // _LANES))
        raw = self._raw_rounds(rounds)[:n]
        vals = (raw >> _U64(11)).astype(np.float64) * _TWO_NEG_53
        return vals.reshape(shape)

    def normal(self, shape=()) -> np.ndarray:
        """Standard normal draws (Box-Muller) as float64."""
        shape = _as_shape(shape)
        n = int(np.prod(shape)) if shape else 1
        half = max(1, -(-n // 2))
        u = self.uniform((2 * half,))
        u1 = u[:half]
        u2 = u[half:]
        # 1 - u1 is in (0, 1], so the log is finite.
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = (2.0 * np.pi) * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return z.reshape(shape)

    def integers(self, upper: int, shape=()) -> np.ndarray:
        """Draws in [0, upper) as int64 via floor(u * upper)."""
        if upper <= 0:
            raise ValueError(f"upper must be positive, got {upper}")
        u = self.uniform(shape)
        return np.minimum((u * upper).astype(np.int64), upper - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) via argsort of uniforms."""
        return np.argsort(self.uniform((n,)), kind="stable")

    def split(self, *tags: int | str) -> "Rng":
        """Independent generator derived from this generator's seed and tags."""
        return Rng(derive_seed(self.seed, *tags))


def _as_shape(shape) -> tuple[int, ...]:
    if isinstance(shape, int):
        return (shape,)
    return tuple(int(s) for s in shape)


def sample_uniform(rng: Rng, shape=(), dtype=None) -> np.ndarray:
    """Uniform [0,1) array; dtype defaults to the active tensor precision."""
    from .tensor import get_default_dtype

    vals = rng.uniform(shape)
    return vals.astype(dtype or get_default_dtype())


def sample_standard_normal(rng: Rng, shape=(), dtype=None) -> np.ndarray:
    """Standard normal array; dtype defaults to the active tensor precision."""
    from .tensor import get_default_dtype

    vals = rng.normal(shape)
    return vals.astype(dtype or get_default_dtype())
