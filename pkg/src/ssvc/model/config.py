"""Model hyperparameters and the three standard presets.

`full_scale()` is the architecture at published dimensions.  It is far
too slow to train on one desk machine, so experiments run on
`desk_scale()`, which divides every width by 8 while keeping all the
counts and the topology (6 posterior convs, 5 attention components,
2 decoder LSTMs).  `micro_scale()` divides by 16 and exists only to
make finite-difference gradient checks affordable.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LatentSpec:
    """What the supervisable latent z_s looks like.

    kind "discrete": z_s is a one-hot over `size` classes, uniform prior.
    kind "continuous": z_s is a `size`-dim vector, standard normal prior.
    """

    kind: str = "discrete"
    size: int = 6

    def validate(self) -> None:
        if self.kind not in ("discrete", "continuous"):
            raise ValueError(f"latent kind must be discrete or continuous, got {self.kind!r}")
        if self.kind == "discrete" and self.size < 2:
            raise ValueError(f"discrete latent needs at least 2 classes, got {self.size}")
        if self.size < 1:
            raise ValueError(f"latent size must be positive, got {self.size}")

    @property
    def width(self) -> int:
        """Width of z_s as a vector input (one-hot K or continuous dim)."""
        return self.size


@dataclass(frozen=True)
class ModelConfig:
    n_mels: int = 80
    vocab_size: int = 32

    # text encoder
    embed_dim: int = 256
    prenet_dims: tuple[int, ...] = (256, 128)
    prenet_dropout: float = 0.5
    bank_k: int = 16
    bank_channels: int = 128
    proj_channels: int = 128
    highway_layers: int = 2
    encoder_gru_units: int = 128
    speaker_count: int = 4
    speaker_embed_dim: int = 16

    # attention + decoder
    attention_lstm_units: int = 256
    attention_mlp_units: int = 128
    gmm_components: int = 5
    decoder_lstm_units: int = 256
    decoder_layers: int = 2
    recurrent_dropout: float = 0.1
    use_zoneout: bool = False
    reduction_factor: int = 2
    stop_margin: float = 2.0
    laplace_scale: float = 1.0

    # latents
    z_u_dim: int = 32
    z_s: LatentSpec = field(default_factory=LatentSpec)

    # variational posterior / classifier trunk
    posterior_conv_filters: tuple[int, ...] = (32, 32, 64, 64, 128, 128)
    posterior_lstm_units: int = 128
    posterior_mlp_units: int = 128
    text_summary_units: int = 128

    def validate(self) -> None:
        self.z_s.validate()
        if self.reduction_factor < 1:
            raise ValueError(f"reduction_factor must be >= 1, got {self.reduction_factor}")
        if self.laplace_scale <= 0:
            raise ValueError(f"laplace_scale must be positive, got {self.laplace_scale}")
        for name in (
            "n_mels", "vocab_size", "embed_dim", "bank_k", "bank_channels",
            "proj_channels", "highway_layers", "encoder_gru_units", "speaker_count",
            "speaker_embed_dim", "attention_lstm_units", "attention_mlp_units",
            "gmm_components", "decoder_lstm_units", "decoder_layers", "z_u_dim",
            "posterior_lstm_units", "posterior_mlp_units", "text_summary_units",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.prenet_dims or any(d < 1 for d in self.prenet_dims):
            raise ValueError(f"bad prenet_dims {self.prenet_dims}")
        if not self.posterior_conv_filters or any(c < 1 for c in self.posterior_conv_filters):
            raise ValueError(f"bad posterior_conv_filters {self.posterior_conv_filters}")

    # -- derived widths -----------------------------------------------

    @property
    def text_dim(self) -> int:
        """Width of encode_text output per position."""
        return 2 * self.encoder_gru_units + self.speaker_embed_dim

    @property
    def conditioned_dim(self) -> int:
        return self.text_dim + self.z_u_dim + self.z_s.width

    def to_json_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["prenet_dims"] = list(self.prenet_dims)
        d["posterior_conv_filters"] = list(self.posterior_conv_filters)
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["z_s"] = LatentSpec(**d["z_s"])
        d["prenet_dims"] = tuple(d["prenet_dims"])
        d["posterior_conv_filters"] = tuple(d["posterior_conv_filters"])
        return cls(**d)


def full_scale(z_s: LatentSpec = LatentSpec()) -> ModelConfig:
    """Published layer dimensions, verbatim."""
    return ModelConfig(z_s=z_s)


def desk_scale(z_s: LatentSpec = LatentSpec()) -> ModelConfig:
    """Widths / 8; same layer counts and topology as full scale."""
    return ModelConfig(
        embed_dim=32,
        prenet_dims=(32, 16),
        bank_k=8,
        bank_channels=16,
        proj_channels=16,
        encoder_gru_units=16,
        speaker_embed_dim=2,
        attention_lstm_units=32,
        attention_mlp_units=16,
        decoder_lstm_units=32,
        z_u_dim=4,
        posterior_conv_filters=(4, 4, 8, 8, 16, 16),
        posterior_lstm_units=16,
        posterior_mlp_units=16,
        text_summary_units=16,
        z_s=z_s,
    )


def micro_scale(z_s: LatentSpec = LatentSpec(size=3)) -> ModelConfig:
    """Widths / 16, for gradient checking only."""
    return ModelConfig(
        embed_dim=16,
        prenet_dims=(16, 8),
        bank_k=4,
        bank_channels=8,
        proj_channels=8,
        encoder_gru_units=8,
        speaker_embed_dim=1,
        attention_lstm_units=16,
        attention_mlp_units=8,
        decoder_lstm_units=16,
        z_u_dim=2,
        posterior_conv_filters=(2, 2, 4, 4, 8, 8),
        posterior_lstm_units=8,
        posterior_mlp_units=8,
        text_summary_units=8,
        z_s=z_s,
    )
