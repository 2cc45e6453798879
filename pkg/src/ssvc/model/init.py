"""Parameter construction for the synthesis model and the classifier.

Layout is a flat ParamStore with dotted names; creation order is fixed
so checkpoints and optimizer slots line up across runs.  Linear and
conv weights get uniform fan-in init, recurrent matrices are
orthogonal, biases are zero except LSTM forget gates (1) and highway
gates (-1, so layers start close to identity).
"""

from __future__ import annotations

import numpy as np

from ..autodiff import ParamStore, Rng, fanin_uniform, lstm_bias, orthogonal
from .config import ModelConfig

# attention pre-activation biases: softplus(-1.5) gives a cursor step of
# about 0.2 text positions per decoder step, softplus(0.5) a spread of
# about one position; both are sane starting points for short utterances
ATT_DELTA_BIAS = -1.5
ATT_SIGMA_BIAS = 0.5


def conv_stack_freq_out(n_mels: int, n_layers: int) -> int:
    """Frequency width left after the strided posterior conv stack."""
    f = n_mels
    for _ in range(n_layers):
        f = (f + 1) // 2
    return f


def _linear(store: ParamStore, rng: Rng, name: str, d_in: int, d_out: int, bias=0.0) -> None:
    store.add(f"{name}.W", fanin_uniform(rng.split(name), (d_in, d_out)))
    store.add(f"{name}.b", np.full(d_out, float(bias)))


def _conv1d(store: ParamStore, rng: Rng, name: str, k: int, c_in: int, c_out: int) -> None:
    store.add(f"{name}.W", fanin_uniform(rng.split(name), (k, c_in, c_out), fan_in=k * c_in))
    store.add(f"{name}.b", np.zeros(c_out))


def _lstm(store: ParamStore, rng: Rng, name: str, d_in: int, units: int) -> None:
    store.add(f"{name}.Wx", fanin_uniform(rng.split(name, "x"), (d_in, 4 * units)))
    store.add(f"{name}.Wh", orthogonal(rng.split(name, "h"), (units, 4 * units)))
    store.add(f"{name}.b", lstm_bias(units))


def _gru(store: ParamStore, rng: Rng, name: str, d_in: int, units: int) -> None:
    store.add(f"{name}.Wx", fanin_uniform(rng.split(name, "x"), (d_in, 3 * units)))
    store.add(f"{name}.Wh", orthogonal(rng.split(name, "h"), (units, 3 * units)))
    store.add(f"{name}.b", np.zeros(3 * units))


def _conv_trunk(store: ParamStore, rng: Rng, prefix: str, cfg: ModelConfig) -> None:
    c_in = 1
    for i, c_out in enumerate(cfg.posterior_conv_filters):
        name = f"{prefix}.conv.{i}"
        store.add(f"{name}.W", fanin_uniform(rng.split(name), (3, 3, c_in, c_out), fan_in=9 * c_in))
        # Relu zero patches make deeper conv windows sum to exactly the bias;
        # keep it off zero so those pre-activations never sit on the relu kink.
        store.add(f"{name}.b", np.full(c_out, 0.1))
        store.add(f"{prefix}.bn.{i}.gamma", np.ones(c_out))
        store.add(f"{prefix}.bn.{i}.beta", np.zeros(c_out))
        store.add_buffer(f"{prefix}.bn.{i}.mean", np.zeros(c_out))
        store.add_buffer(f"{prefix}.bn.{i}.var", np.ones(c_out))
        c_in = c_out
    feat = conv_stack_freq_out(cfg.n_mels, len(cfg.posterior_conv_filters)) * c_in
    _lstm(store, rng, f"{prefix}.lstm", feat, cfg.posterior_lstm_units)


def build_params(cfg: ModelConfig, rng: Rng) -> ParamStore:
    cfg.validate()
    store = ParamStore()
    p_out = cfg.prenet_dims[-1]

    # text encoder
    store.add("enc.embed", fanin_uniform(rng.split("enc.embed"), (cfg.vocab_size, cfg.embed_dim),
                                         fan_in=cfg.embed_dim))
    d = cfg.embed_dim
    for i, width in enumerate(cfg.prenet_dims):
        _linear(store, rng, f"enc.prenet.{i}", d, width)
        d = width
    for k in range(1, cfg.bank_k + 1):
        _conv1d(store, rng, f"enc.bank.{k}", k, p_out, cfg.bank_channels)
    _conv1d(store, rng, "enc.proj1", 3, cfg.bank_k * cfg.bank_channels, cfg.proj_channels)
    _conv1d(store, rng, "enc.proj2", 3, cfg.proj_channels, p_out)
    for i in range(cfg.highway_layers):
        _linear(store, rng, f"enc.highway.{i}.h", p_out, p_out)
        _linear(store, rng, f"enc.highway.{i}.t", p_out, p_out, bias=-1.0)
    _gru(store, rng, "enc.gru_f", p_out, cfg.encoder_gru_units)
    _gru(store, rng, "enc.gru_b", p_out, cfg.encoder_gru_units)
    store.add("enc.speaker", fanin_uniform(rng.split("enc.speaker"),
                                           (cfg.speaker_count, cfg.speaker_embed_dim),
                                           fan_in=cfg.speaker_embed_dim))

    # attention and decoder; the decoder has its own prenet over frames
    d_cond = cfg.conditioned_dim
    d = cfg.n_mels
    for i, width in enumerate(cfg.prenet_dims):
        _linear(store, rng, f"dec.prenet.{i}", d, width)
        d = width
    _lstm(store, rng, "att.lstm", p_out + d_cond, cfg.attention_lstm_units)
    _linear(store, rng, "att.mlp", cfg.attention_lstm_units, cfg.attention_mlp_units)
    c = cfg.gmm_components
    store.add("att.out.W", fanin_uniform(rng.split("att.out"), (cfg.attention_mlp_units, 3 * c)))
    store.add("att.out.b", np.concatenate([
        np.full(c, ATT_DELTA_BIAS), np.full(c, ATT_SIGMA_BIAS), np.zeros(c),
    ]))
    d_in = cfg.attention_lstm_units + d_cond
    for i in range(cfg.decoder_layers):
        _lstm(store, rng, f"dec.lstm.{i}", d_in, cfg.decoder_lstm_units)
        d_in = cfg.decoder_lstm_units
    _linear(store, rng, "dec.out", cfg.decoder_lstm_units + d_cond,
            cfg.reduction_factor * cfg.n_mels)

    # variational posteriors: shared trunk, shared text summary,
    # separate heads (z_s feeds only the z_u head)
    _conv_trunk(store, rng, "post", cfg)
    _gru(store, rng, "summary.gru", cfg.text_dim, cfg.text_summary_units)
    head_in = cfg.posterior_lstm_units + cfg.text_summary_units + cfg.speaker_embed_dim
    zs_out = cfg.z_s.size if cfg.z_s.kind == "discrete" else 2 * cfg.z_s.size
    _linear(store, rng, "post.zs.mlp", head_in, cfg.posterior_mlp_units)
    _linear(store, rng, "post.zs.out", cfg.posterior_mlp_units, zs_out)
    _linear(store, rng, "post.zu.mlp", head_in + cfg.z_s.width, cfg.posterior_mlp_units)
    _linear(store, rng, "post.zu.out", cfg.posterior_mlp_units, 2 * cfg.z_u_dim)
    return store


def build_classifier_params(cfg: ModelConfig, rng: Rng) -> ParamStore:
    """The held-out evaluation classifier: posterior trunk shape, no text."""
    cfg.validate()
    if cfg.z_s.kind != "discrete":
        raise ValueError("evaluation classifier needs a discrete latent spec")
    store = ParamStore()
    _conv_trunk(store, rng, "cls", cfg)
    _linear(store, rng, "cls.mlp", cfg.posterior_lstm_units, cfg.posterior_mlp_units)
    _linear(store, rng, "cls.out", cfg.posterior_mlp_units, cfg.z_s.size)
    return store
