from typing import Optional

from torch import Tensor, nn

from ..data.corpus import FeatureDims, Modality
from ..errors import ConfigError
from ..tensor.layers import BiGRU, FeedForward, LayerNorm, Linear

Streams = tuple[Tensor, Tensor, Tensor]


class InputProjection(nn.Module):
    """Per-modality projection d_m -> D; the only modality-specific weights."""

    def __init__(self, dims: FeatureDims, dim: int):
        super().__init__()
        self.proj = nn.ModuleDict({m.value: Linear(dims.of(m), dim) for m in Modality})

    def forward(
        self, streams: Streams, modalities: tuple[Modality, Modality, Modality]
    ) -> Streams:
        first, second, third = (
            self.proj[m.value](x) for x, m in zip(streams, modalities, strict=True)
        )
        return first, second, third


class UnimodalLayer(nn.Module):
    """X_rr = LN(X + BiGRU(X)); X_fr = LN(X + X_rr + FF(X_rr))."""

    def __init__(self, dim: int, ff_dim: int, dropout: float, eps: float = 1e-5):
        super().__init__()
        self.rnn = BiGRU(dim)
        self.rnn_norm = LayerNorm(dim, eps)
        self.ff = FeedForward(dim, ff_dim, dropout)
        self.ff_norm = LayerNorm(dim, eps)

    def forward(self, x: Tensor, lengths: Optional[Tensor] = None) -> Tensor:
        x_rr = self.rnn_norm(x + self.rnn(x, lengths))
        return self.ff_norm(x + x_rr + self.ff(x_rr))


class UnimodalEncoder(nn.Module):
    """Stack of recurrent layers applied, with one parameter set, to every stream.

    Streams never exchange information here; the same layer weights encode
    each of them in turn.
    """

    def __init__(
        self, dim: int, ff_dim: int, depth: int, dropout: float, eps: float = 1e-5
    ):
        super().__init__()
        if depth < 1:
            raise ConfigError(f"unimodal depth must be at least 1, got {depth}")
        self.layers = nn.ModuleList(
            UnimodalLayer(dim, ff_dim, dropout, eps) for _ in range(depth)
        )

    def encode_stream(self, x: Tensor, lengths: Optional[Tensor] = None) -> Tensor:
        for layer in self.layers:
            x = layer(x, lengths)
        return x

    def forward(self, streams: Streams, lengths: Optional[Tensor] = None) -> Streams:
        first, second, third = (self.encode_stream(x, lengths) for x in streams)
        return first, second, third
