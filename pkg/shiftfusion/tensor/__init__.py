from .gradcheck import GradCheckReport, TensorCheck, grad_check
from .layers import BiGRU, Dropout, FeedForward, LayerNorm, Linear, MultiHeadAttention
from .ops import (
    AttentionResult,
    bigru,
    dropout,
    layer_norm,
    linear,
    multi_head_attention,
    scaled_dot_attention,
    softmax,
)
from .rng import RngState, current_rng, derive_seed, use_rng

__all__ = [
    "AttentionResult",
    "BiGRU",
    "Dropout",
    "FeedForward",
    "GradCheckReport",
    "LayerNorm",
    "Linear",
    "MultiHeadAttention",
    "RngState",
    "TensorCheck",
    "bigru",
    "current_rng",
    "derive_seed",
    "dropout",
    "grad_check",
    "layer_norm",
    "linear",
    "multi_head_attention",
    "scaled_dot_attention",
    "softmax",
    "use_rng",
]
