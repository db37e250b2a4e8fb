import logging
from typing import NamedTuple, Optional

import torch
from torch import Tensor, nn

from ..errors import ConfigError, DimensionError
from ..tensor import ops
from ..tensor.layers import Dropout, Linear
from ..tensor.rng import current_rng

logger = logging.getLogger(__name__)


class ClassifierOutput(NamedTuple):
    logits: Tensor
    probs: Tensor
    preds: Tensor


class ShiftOutput(NamedTuple):
    """Pairwise shift predictions; ``pair_mask`` marks the pairs that were scored."""

    probs: Tensor
    preds: Tensor
    pair_mask: Tensor


class EmotionClassifier(nn.Module):
    """probs = softmax(W_out DP(ReLU(W_hidden h)))."""

    def __init__(self, in_dim: int, hidden: int, num_classes: int, dropout: float):
        super().__init__()
        if num_classes < 2:
            raise ConfigError(f"need at least two emotion classes, got {num_classes}")
        self.hidden = Linear(in_dim, hidden)
        self.out = Linear(hidden, num_classes)
        self.dropout = Dropout(dropout)

    def forward(self, h: Tensor) -> ClassifierOutput:
        logits = self.out(self.dropout(torch.relu(self.hidden(h))))
        probs = ops.softmax(logits)
        # torch.argmax returns the first maximal index
        return ClassifierOutput(logits, probs, torch.argmax(probs, dim=-1))


def _check_same_shape(h: Tensor, h_prime: Tensor) -> None:
    if h.shape != h_prime.shape:
        raise DimensionError(
            f"shift tensor needs two equally shaped fusions, got {tuple(h.shape)}"
            f" and {tuple(h_prime.shape)}"
        )


def build_shift_tensor(h: Tensor, h_prime: Tensor) -> Tensor:
    """``T[..., i, j, :] = cat(h[..., i, :], h_prime[..., j, :])``."""
    _check_same_shape(h, h_prime)
    *lead, length, width = h.shape
    pair_shape = (*lead, length, length, width)
    left = h.unsqueeze(-2).expand(pair_shape)
    right = h_prime.unsqueeze(-3).expand(pair_shape)
    return torch.cat([left, right], dim=-1)


def sample_pair_mask(pair_mask: Tensor, cap: int) -> Tensor:
    """Keep at most ``cap * cap`` uniformly chosen valid pairs per dialogue.

    Dialogues with no more than ``cap`` utterances keep every pair. Draws come
    from the active ``RngState`` when one is installed.
    """
    rng = current_rng()
    sampled = pair_mask.clone()
    lengths = pair_mask.diagonal(dim1=-2, dim2=-1).sum(-1)
    for b, n in enumerate(lengths.tolist()):
        if n <= cap:
            continue
        flat = pair_mask[b].reshape(-1).nonzero().squeeze(-1)
        perm = rng.permutation(flat.numel()) if rng is not None else torch.randperm(flat.numel())
        chosen = flat[perm[: cap * cap]]
        row = torch.zeros_like(pair_mask[b]).reshape(-1)
        row[chosen] = True
        sampled[b] = row.view_as(pair_mask[b])
        logger.debug(f"Dialogue {b} has {n} utterances; scoring {cap * cap} of {n * n} pairs")
    return sampled


class ShiftClassifier(nn.Module):
    """Binary shift / no-shift classifier over every ordered utterance pair."""

    def __init__(self, in_dim: int, hidden: int, dropout: float, pair_cap: int = 512):
        super().__init__()
        self.hidden = Linear(2 * in_dim, hidden)
        self.out = Linear(hidden, 2)
        self.dropout = Dropout(dropout)
        self.pair_cap = pair_cap

    def classify(self, t: Tensor) -> tuple[Tensor, Tensor]:
        logits = self.out(self.dropout(torch.relu(self.hidden(t))))
        probs = ops.softmax(logits)
        return probs, torch.argmax(probs, dim=-1)

    def forward(
        self, h: Tensor, h_prime: Tensor, pair_mask: Optional[Tensor] = None
    ) -> ShiftOutput:
        if pair_mask is None:
            length = h.shape[-2]
            pair_mask = torch.ones(
                (*h.shape[:-2], length, length), dtype=torch.bool, device=h.device
            )
        if h.dim() < 3 or h.shape[-2] <= self.pair_cap:
            probs, preds = self.classify(build_shift_tensor(h, h_prime))
            return ShiftOutput(probs, preds, pair_mask)

        _check_same_shape(h, h_prime)
        sampled = sample_pair_mask(pair_mask, self.pair_cap)
        b, i, j = sampled.nonzero(as_tuple=True)
        pair_probs, _ = self.classify(torch.cat([h[b, i], h_prime[b, j]], dim=-1))
        probs = h.new_zeros((*sampled.shape, 2)).index_put((b, i, j), pair_probs)
        return ShiftOutput(probs, torch.argmax(probs, dim=-1), sampled)
