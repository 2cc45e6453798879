import numpy as np
import pytest

from ssvc.autodiff import ParamStore, Rng, fanin_uniform, lstm_bias, orthogonal
from ssvc.autodiff.tensor import default_dtype


def test_registration_and_lookup():
    store = ParamStore()
    w = store.add("enc.w", np.zeros((3, 4)))
    assert store["enc.w"] is w
    assert "enc.w" in store
    assert store.names() == ["enc.w"]
    assert store.count() == 12
    with pytest.raises(KeyError):
        store.add("enc.w", np.zeros(1))


def test_state_round_trip():
    with default_dtype(np.float64):
        store = ParamStore()
        store.add("a", np.arange(6, dtype=np.float64).reshape(2, 3))
        store.add_buffer("bn.mean", np.full(3, 2.0))
        state = {k: v.copy() for k, v in store.state_arrays().items()}

        store["a"].data[...] = -1
        store.buffer("bn.mean")[...] = 0.0
        store.load_state_arrays(state)
    assert np.allclose(store["a"].data, np.arange(6).reshape(2, 3))
    assert np.allclose(store.buffer("bn.mean"), 2.0)


def test_load_rejects_shape_mismatch():
    store = ParamStore()
    store.add("a", np.zeros((2, 2)))
    with pytest.raises(ValueError, match="shape mismatch"):
        store.load_state_arrays({"param.a": np.zeros((3, 3))})


def test_zero_grad_and_finite_check():
    store = ParamStore()
    t = store.add("w", np.ones(3))
    t.grad = np.array([1.0, 2.0, 3.0], dtype=np.float32)
    assert store.grads_finite()
    t.grad[1] = np.nan
    assert not store.grads_finite()
    store.zero_grad()
    assert t.grad is None


def test_fanin_uniform_bounds():
    v = fanin_uniform(Rng(3), (100, 50))
    lim = 1.0 / np.sqrt(100)
    assert np.abs(v).max() <= lim
    assert np.abs(v).max() > 0.5 * lim  # actually fills the range


def test_orthogonal_is_orthogonal_both_ways():
    q = orthogonal(Rng(4), (6, 6))
    assert np.allclose(q @ q.T, np.eye(6), atol=1e-10)
    tall = orthogonal(Rng(5), (8, 3))
    assert np.allclose(tall.T @ tall, np.eye(3), atol=1e-10)
    wide = orthogonal(Rng(6), (3, 8))
    assert np.allclose(wide @ wide.T, np.eye(3), atol=1e-10)
    # deterministic given the seed
    assert np.array_equal(q, orthogonal(Rng(4), (6, 6)))


def test_lstm_bias_sets_forget_block():
    b = lstm_bias(4, 1.0)
    assert b.shape == (16,)
    assert np.all(b[4:8] == 1.0)
    assert np.all(b[:4] == 0.0) and np.all(b[8:] == 0.0)
