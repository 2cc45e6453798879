"""Alignment distortion: identity, hand-traced cases, brute-force parity."""

import numpy as np
import pytest

from ssvc.autodiff import Rng
from ssvc.dsp import MelConfig, MelSpectrogram, aligned_average_cost, mcd_dtw

from oracles import dtw_brute

SR = 24_000


def _mel(frames):
    return MelSpectrogram(np.asarray(frames, dtype=np.float64), MelConfig(), SR)


def test_self_distance_is_exactly_zero():
    rng = Rng(70)
    x = _mel(rng.normal((12, 80)))
    assert mcd_dtw(x, x) == 0.0


def test_nonnegative_on_random_pairs():
    rng = Rng(71)
    for _ in range(10):
        a = _mel(rng.normal((5, 80)))
        b = _mel(rng.normal((8, 80)))
        assert mcd_dtw(a, b) >= 0.0


def test_matches_brute_force_on_small_matrices():
    rng = Rng(72)
    for _ in range(50):
        n = 2 + int(rng.uniform() * 5)
        m = 2 + int(rng.uniform() * 5)
        dist = np.abs(rng.normal((n, m)))
        got = aligned_average_cost(dist, 1.0)
        want = dtw_brute(dist, 1.0)
        assert np.isclose(got, want, atol=1e-12), (n, m, got, want)


def test_duplicated_frame_costs_one_penalty_over_path_length():
    rng = Rng(73)
    base = rng.normal((6, 80))
    dup = np.insert(base, 3, base[3], axis=0)
    got = mcd_dtw(_mel(base), _mel(dup), warp_penalty=1.0)
    assert np.isclose(got, 1.0 / 7.0, atol=1e-12)


def test_penalty_scales_warp_cost():
    rng = Rng(74)
    base = rng.normal((5, 80))
    dup = np.insert(base, 2, base[2], axis=0)
    assert np.isclose(mcd_dtw(_mel(base), _mel(dup), warp_penalty=2.5), 2.5 / 6.0)


def test_config_mismatch_is_an_error():
    a = MelSpectrogram(np.zeros((3, 80)), MelConfig(), SR)
    b = MelSpectrogram(np.zeros((3, 80)), MelConfig(fmax=11_000), SR)
    with pytest.raises(ValueError, match="configs differ"):
        mcd_dtw(a, b)


def test_empty_sequence_is_an_error():
    with pytest.raises(ValueError, match="at least one frame"):
        aligned_average_cost(np.zeros((0, 3)), 1.0)


def test_single_frame_pair_is_just_the_distance():
    dist = np.array([[2.5]])
    assert aligned_average_cost(dist, 1.0) == 2.5


def test_pure_insertion_run():
    # one row vs m identical columns: m-1 horizontal steps, all penalized
    dist = np.zeros((1, 4))
    assert np.isclose(aligned_average_cost(dist, 1.0), 3.0 / 4.0)
