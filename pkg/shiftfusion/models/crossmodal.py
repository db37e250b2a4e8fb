import logging
from typing import Optional

import torch
from torch import Tensor, nn

from ..errors import ConfigError
from ..tensor.layers import Dropout, FeedForward, LayerNorm, Linear, MultiHeadAttention
from .settings import FusionEncoder
from .unimodal import Streams

logger = logging.getLogger(__name__)

# stream slots; slot 0 plays the textual role
TEXT, VISUAL, AUDIO = 0, 1, 2


class CrossModalLayer(nn.Module):
    """One text-centred fusion layer.

    Every stream first attends to itself. The textual stream then queries the
    other two and merges both answers through a linear map, while each
    non-textual stream queries the textual one. A residual feedforward stage
    closes the layer. Residual anchors are the layer inputs.
    """

    def __init__(
        self,
        dim: int,
        num_heads: int,
        ff_dim: int,
        dropout: float,
        eps: float = 1e-5,
    ):
        super().__init__()
        self.self_attn = nn.ModuleList(MultiHeadAttention(dim, num_heads) for _ in range(3))
        self.self_norm = nn.ModuleList(LayerNorm(dim, eps) for _ in range(3))

        self.text_from_visual = MultiHeadAttention(dim, num_heads)
        self.text_from_audio = MultiHeadAttention(dim, num_heads)
        self.text_merge = Linear(2 * dim, dim)
        self.visual_from_text = MultiHeadAttention(dim, num_heads)
        self.audio_from_text = MultiHeadAttention(dim, num_heads)
        self.cross_norm = nn.ModuleList(LayerNorm(dim, eps) for _ in range(3))

        self.ff = nn.ModuleList(FeedForward(dim, ff_dim, dropout) for _ in range(3))
        self.ff_norm = nn.ModuleList(LayerNorm(dim, eps) for _ in range(3))
        self.dropout = Dropout(dropout)

    def self_stage(self, x: Tensor, slot: int, mask: Optional[Tensor] = None) -> Tensor:
        attended = self.self_attn[slot](x, x, x, mask)
        return self.self_norm[slot](x + self.dropout(attended))

    def cross_text(
        self,
        x_text: Tensor,
        sr_text: Tensor,
        sr_visual: Tensor,
        sr_audio: Tensor,
        mask: Optional[Tensor] = None,
    ) -> Tensor:
        from_visual = self.dropout(self.text_from_visual(sr_text, sr_visual, sr_visual, mask))
        from_audio = self.dropout(self.text_from_audio(sr_text, sr_audio, sr_audio, mask))
        merged = torch.relu(self.text_merge(torch.cat([from_visual, from_audio], dim=-1)))
        return self.cross_norm[TEXT](x_text + sr_text + merged)

    def cross_nontext(
        self,
        x: Tensor,
        sr: Tensor,
        sr_text: Tensor,
        slot: int,
        mask: Optional[Tensor] = None,
    ) -> Tensor:
        if slot == VISUAL:
            attn = self.visual_from_text
        elif slot == AUDIO:
            attn = self.audio_from_text
        else:
            raise ValueError(f"slot {slot} is not a non-textual stream")
        attended = self.dropout(attn(sr, sr_text, sr_text, mask))
        return self.cross_norm[slot](x + sr + attended)

    def ff_stage(self, x: Tensor, cr: Tensor, slot: int) -> Tensor:
        return self.ff_norm[slot](x + cr + self.ff[slot](cr))

    def forward(self, streams: Streams, mask: Optional[Tensor] = None) -> Streams:
        x_t, x_v, x_a = streams
        sr_t = self.self_stage(x_t, TEXT, mask)
        sr_v = self.self_stage(x_v, VISUAL, mask)
        sr_a = self.self_stage(x_a, AUDIO, mask)

        cr_t = self.cross_text(x_t, sr_t, sr_v, sr_a, mask)
        cr_v = self.cross_nontext(x_v, sr_v, sr_t, VISUAL, mask)
        cr_a = self.cross_nontext(x_a, sr_a, sr_t, AUDIO, mask)

        return (
            self.ff_stage(x_t, cr_t, TEXT),
            self.ff_stage(x_v, cr_v, VISUAL),
            self.ff_stage(x_a, cr_a, AUDIO),
        )


class CrossModalEncoder(nn.Module):
    def __init__(
        self,
        dim: int,
        num_heads: int,
        ff_dim: int,
        depth: int,
        dropout: float,
        eps: float = 1e-5,
    ):
        super().__init__()
        if depth < 1:
            raise ConfigError(f"cross-modal depth must be at least 1, got {depth}")
        self.layers = nn.ModuleList(
            CrossModalLayer(dim, num_heads, ff_dim, dropout, eps) for _ in range(depth)
        )

    def forward(self, streams: Streams, mask: Optional[Tensor] = None) -> Tensor:
        for layer in self.layers:
            streams = layer(streams, mask)
        return torch.cat(streams, dim=-1)


class TransformerLayer(nn.Module):
    """Post-norm transformer encoder layer."""

    def __init__(
        self, dim: int, num_heads: int, ff_dim: int, dropout: float, eps: float = 1e-5
    ):
        super().__init__()
        self.attn = MultiHeadAttention(dim, num_heads)
        self.attn_norm = LayerNorm(dim, eps)
        self.ff = FeedForward(dim, ff_dim, dropout)
        self.ff_norm = LayerNorm(dim, eps)
        self.dropout = Dropout(dropout)

    def forward(self, x: Tensor, mask: Optional[Tensor] = None) -> Tensor:
        x = self.attn_norm(x + self.dropout(self.attn(x, x, x, mask)))
        return self.ff_norm(x + self.ff(x))


class TransformerFusionEncoder(nn.Module):
    """Baseline fusion with a plain transformer encoder.

    ``tfe1`` stacks the three streams along the utterance axis (sequence
    length 3U, width D); ``tfe2`` concatenates them along features (width 3D).
    Both return ``[..., U, 3D]``.
    """

    def __init__(
        self,
        kind: FusionEncoder,
        dim: int,
        num_heads: int,
        ff_dim: int,
        depth: int,
        dropout: float,
        eps: float = 1e-5,
    ):
        super().__init__()
        if kind == FusionEncoder.CROSSMODAL:
            raise ConfigError("TransformerFusionEncoder needs a transformer encoder kind")
        if depth < 1:
            raise ConfigError(f"transformer depth must be at least 1, got {depth}")
        self.kind = kind
        width = dim if kind == FusionEncoder.SEQUENCE_TRANSFORMER else 3 * dim
        hidden = ff_dim * width // dim
        self.layers = nn.ModuleList(
            TransformerLayer(width, num_heads, hidden, dropout, eps) for _ in range(depth)
        )

    def encode(self, x: Tensor, mask: Optional[Tensor] = None) -> Tensor:
        for layer in self.layers:
            x = layer(x, mask)
        return x

    def forward(self, streams: Streams, mask: Optional[Tensor] = None) -> Tensor:
        if self.kind == FusionEncoder.FEATURE_TRANSFORMER:
            return self.encode(torch.cat(streams, dim=-1), mask)

        length = streams[0].shape[-2]
        stacked_mask = torch.cat([mask] * 3, dim=-1) if mask is not None else None
        out = self.encode(torch.cat(streams, dim=-2), stacked_mask)
        return torch.cat(out.split(length, dim=-2), dim=-1)


def build_fusion_encoder(
    kind: FusionEncoder,
    dim: int,
    num_heads: int,
    ff_dim: int,
    depth: int,
    dropout: float,
    eps: float = 1e-5,
) -> nn.Module:
    logger.debug(f"Building {kind.value} fusion encoder of depth {depth}")
    if kind == FusionEncoder.CROSSMODAL:
        return CrossModalEncoder(dim, num_heads, ff_dim, depth, dropout, eps)
    return TransformerFusionEncoder(kind, dim, num_heads, ff_dim, depth, dropout, eps)
