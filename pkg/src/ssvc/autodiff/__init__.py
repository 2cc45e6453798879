"""Reverse-mode autodiff engine, deterministic RNG, and array I/O."""

from .gradcheck import GradCheckReport, gradcheck_directional, gradcheck_entrywise
from .ndar import FormatError, load_array, read_ndar, save_array, write_ndar
from .params import ParamStore, fanin_uniform, lstm_bias, orthogonal
from .rng import Rng, derive_seed, sample_standard_normal, sample_uniform
from .tensor import (
    ShapeError,
    Tensor,
    as_tensor,
    concat,
    default_dtype,
    get_default_dtype,
    no_grad,
    ones,
    set_default_dtype,
    stack,
    zeros,
)

__all__ = [
    "FormatError",
    "GradCheckReport",
    "ParamStore",
    "Rng",
    "ShapeError",
    "Tensor",
    "as_tensor",
    "concat",
    "default_dtype",
    "derive_seed",
    "fanin_uniform",
    "get_default_dtype",
    "gradcheck_directional",
    "gradcheck_entrywise",
    "load_array",
    "lstm_bias",
    "no_grad",
    "ones",
    "orthogonal",
    "read_ndar",
    "sample_standard_normal",
    "sample_uniform",
    "save_array",
    "set_default_dtype",
    "stack",
    "write_ndar",
    "zeros",
]
