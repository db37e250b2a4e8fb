"""Differentiable primitives shared by every encoder, head and loss.

All functions operate on the last axis and accept arbitrary leading (batch)
axes. Gradients come from torch autograd; ``gradcheck.grad_check`` verifies
them against finite differences.
"""

import logging
import math
from typing import NamedTuple, Optional

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from ..errors import ConfigError, DimensionError
from .rng import RngState, current_rng

logger = logging.getLogger(__name__)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """y = x Wᵀ + b over the last axis."""
    if weight.dim() != 2:
        raise DimensionError(f"weight must be 2-D, got shape {tuple(weight.shape)}")
    if x.shape[-1] != weight.shape[1]:
        raise DimensionError(
            f"linear: input axis -1 has size {x.shape[-1]} but weight expects"
            f" {weight.shape[1]} (weight shape {tuple(weight.shape)})"
        )
    if bias is not None and bias.shape != (weight.shape[0],):
        raise DimensionError(
            f"linear: bias shape {tuple(bias.shape)} does not match output axis"
            f" of size {weight.shape[0]}"
        )
    return F.linear(x, weight, bias)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    d = x.shape[-1]
    if d < 1:
        raise DimensionError("layer_norm: feature axis must be non-empty")
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(
            f"layer_norm: affine shapes {tuple(gamma.shape)}/{tuple(beta.shape)}"
            f" do not match feature axis of size {d}"
        )
    return F.layer_norm(x, (d,), gamma, beta, eps)


def check_dropout_rate(rate: float) -> float:
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    return rate


def dropout(
    x: Tensor,
    rate: float,
    training: bool,
    rng: Optional[RngState] = None,
) -> Tensor:
    """Inverted dropout; identity in eval mode or at rate 0.

    The mask is drawn from ``rng`` or, when omitted, from the stream installed
    with ``use_rng``. Without either, torch's global generator is used.
    """
    check_dropout_rate(rate)
    if not training or rate == 0.0:
        return x
    rng = rng or current_rng()
    if rng is None:
        draws = torch.rand(x.shape, dtype=x.dtype, device=x.device)
    else:
        draws = rng.uniform(x.shape, x.dtype).to(x.device)
    keep = draws >= rate
    return x * keep / (1.0 - rate)


def softmax(x: Tensor) -> Tensor:
    # torch.softmax subtracts the row max before exponentiating
    return torch.softmax(x, dim=-1)


class AttentionResult(NamedTuple):
    values: Tensor
    weights: Tensor
    empty_rows: Tensor


def scaled_dot_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    key_mask: Optional[Tensor] = None,
) -> AttentionResult:
    """softmax(QKᵀ/√d_k)V with invalid keys excluded before normalisation.

    Args:
        q: Queries ``[..., n_q, d_k]``.
        k: Keys ``[..., n_k, d_k]``.
        v: Values ``[..., n_k, d_v]``.
        key_mask: Optional boolean validity ``[..., n_k]`` (True = valid). Its
            leading axes must broadcast against ``q.shape[:-2]``.

    Returns:
        Attention output, the weights, and a boolean flag per query row that is
        True when every key was masked (the output row is then exactly zero).
    """
    if q.shape[-1] != k.shape[-1]:
        raise DimensionError(
            f"attention: query axis -1 ({q.shape[-1]}) differs from key axis -1"
            f" ({k.shape[-1]})"
        )
    if k.shape[-2] != v.shape[-2]:
        raise DimensionError(
            f"attention: {k.shape[-2]} keys but {v.shape[-2]} values"
        )
    scores = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
    if key_mask is None:
        weights = softmax(scores)
        empty = torch.zeros(scores.shape[:-1], dtype=torch.bool, device=scores.device)
        return AttentionResult(weights @ v, weights, empty)

    if key_mask.shape[-1] != k.shape[-2]:
        raise DimensionError(
            f"attention: mask covers {key_mask.shape[-1]} keys, expected {k.shape[-2]}"
        )
    valid = key_mask.to(torch.bool).unsqueeze(-2)
    scores = scores.masked_fill(~valid, torch.finfo(scores.dtype).min)
    weights = softmax(scores).masked_fill(~valid, 0.0)
    empty = (~valid.any(dim=-1)).expand(scores.shape[:-1])
    return AttentionResult(weights @ v, weights, empty)


def split_heads(x: Tensor, num_heads: int) -> Tensor:
    """``[..., n, d]`` -> ``[..., h, n, d/h]``"""
    *lead, n, d = x.shape
    return x.reshape(*lead, n, num_heads, d // num_heads).transpose(-3, -2)


def merge_heads(x: Tensor) -> Tensor:
    """``[..., h, n, d/h]`` -> ``[..., n, d]``"""
    *lead, h, n, d_head = x.shape
    return x.transpose(-3, -2).reshape(*lead, n, h * d_head)


def multi_head_attention(
    query: Tensor,
    key: Tensor,
    value: Tensor,
    w_q: Tensor,
    w_k: Tensor,
    w_v: Tensor,
    w_o: Tensor,
    num_heads: int,
    key_mask: Optional[Tensor] = None,
) -> Tensor:
    """W_mha · CAT(head_1..head_h), head_i = ATT(W_Q,i Q, W_K,i K, W_V,i V).

    The per-head projections are the row blocks of ``w_q``, ``w_k`` and
    ``w_v``; projections carry no bias.
    """
    d_model = w_q.shape[0]
    if num_heads < 1 or d_model % num_heads != 0:
        raise ConfigError(
            f"model dimension {d_model} is not divisible by {num_heads} heads"
        )
    q = split_heads(linear(query, w_q), num_heads)
    k = split_heads(linear(key, w_k), num_heads)
    v = split_heads(linear(value, w_v), num_heads)
    # mask [..., n_k] -> [..., 1, n_k] so that it broadcasts over the head axis
    mask = key_mask.unsqueeze(-2) if key_mask is not None else None
    result = scaled_dot_attention(q, k, v, mask)
    if logger.isEnabledFor(logging.DEBUG) and bool(result.empty_rows.any()):
        logger.debug("attention rows with no valid key were zeroed")
    return linear(merge_heads(result.values), w_o)


def bigru(x: Tensor, gru: nn.GRU, lengths: Optional[Tensor] = None) -> Tensor:
    """Run a bidirectional GRU over utterance order.

    ``x`` is ``[n, d]`` for one dialogue or ``[B, n, d]`` for a padded batch
    with per-dialogue ``lengths``; the backward direction starts at each
    dialogue's last valid utterance. Direction outputs are concatenated, so
    the output width is ``2 * gru.hidden_size``; padded rows are zero.
    """
    if not gru.bidirectional or not gru.batch_first:
        raise ConfigError("bigru expects a bidirectional, batch_first nn.GRU")
    if x.shape[-1] != gru.input_size:
        raise DimensionError(
            f"bigru: input axis -1 has size {x.shape[-1]}, GRU expects {gru.input_size}"
        )
    if x.dim() == 2:
        return gru(x.unsqueeze(0))[0].squeeze(0)
    if lengths is None:
        return gru(x)[0]
    packed = nn.utils.rnn.pack_padded_sequence(
        x, lengths.to("cpu", torch.int64), batch_first=True, enforce_sorted=False
    )
    out, _ = gru(packed)
    out, _ = nn.utils.rnn.pad_packed_sequence(
        out, batch_first=True, total_length=x.shape[1]
    )
    return out
