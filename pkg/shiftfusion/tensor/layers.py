from typing import Optional

import torch
from torch import Tensor, nn

from ..errors import ConfigError
from . import ops


class Linear(nn.Linear):
    def forward(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class LayerNorm(nn.LayerNorm):
    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__(dim, eps=eps)

    def forward(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.weight, self.bias, self.eps)


class Dropout(nn.Module):
    """Inverted dropout drawing its mask from the active ``RngState``."""

    def __init__(self, rate: float):
        super().__init__()
        self.rate = ops.check_dropout_rate(rate)

    def extra_repr(self) -> str:
        return f"rate={self.rate}"

    def forward(self, x: Tensor) -> Tensor:
        return ops.dropout(x, self.rate, self.training)


class FeedForward(nn.Module):
    """DP(FC(DP(ReLU(FC(x))))) mapping dim -> hidden -> dim."""

    def __init__(self, dim: int, hidden: int, dropout: float):
        super().__init__()
        self.fc1 = Linear(dim, hidden)
        self.fc2 = Linear(hidden, dim)
        self.dropout = Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        hidden = self.dropout(torch.relu(self.fc1(x)))
        return self.dropout(self.fc2(hidden))


class MultiHeadAttention(nn.Module):
    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        if num_heads < 1 or dim % num_heads != 0:
            raise ConfigError(
                f"model dimension {dim} is not divisible by {num_heads} heads"
            )
        self.num_heads = num_heads
        self.q_proj = Linear(dim, dim, bias=False)
        self.k_proj = Linear(dim, dim, bias=False)
        self.v_proj = Linear(dim, dim, bias=False)
        self.out_proj = Linear(dim, dim, bias=False)

    def forward(
        self,
        query: Tensor,
        key: Tensor,
        value: Tensor,
        key_mask: Optional[Tensor] = None,
    ) -> Tensor:
        return ops.multi_head_attention(
            query,
            key,
            value,
            self.q_proj.weight,
            self.k_proj.weight,
            self.v_proj.weight,
            self.out_proj.weight,
            self.num_heads,
            key_mask,
        )


class BiGRU(nn.Module):
    """Bidirectional GRU whose concatenated output keeps the input width."""

    def __init__(self, dim: int):
        super().__init__()
        if dim % 2 != 0:
            raise ConfigError(f"bidirectional GRU needs an even width, got {dim}")
        self.gru = nn.GRU(dim, dim // 2, batch_first=True, bidirectional=True)

    def forward(self, x: Tensor, lengths: Optional[Tensor] = None) -> Tensor:
        return ops.bigru(x, self.gru, lengths)
