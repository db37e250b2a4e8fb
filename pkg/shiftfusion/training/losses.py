from typing import Optional

import torch
from torch import Tensor, nn

from ..data.batching import PAD_LABEL
from .settings import LambdaMode, ObjectiveConfig

LOG_CLAMP = 1e-12


def _gold_nll(probs: Tensor, gold: Tensor) -> Tensor:
    picked = probs.gather(-1, gold.clamp(min=0).unsqueeze(-1)).squeeze(-1)
    return -torch.log(picked.clamp(min=LOG_CLAMP))


def classification_loss(probs: Tensor, gold: Tensor) -> Tensor:
    """Cross-entropy averaged over every real utterance in the batch.

    ``gold`` carries ``PAD_LABEL`` at padded positions; those are ignored and
    the denominator is the number of real utterances.
    """
    mask = gold != PAD_LABEL
    count = mask.sum()
    if count == 0:
        raise ValueError("batch contains no labelled utterances")
    nll = _gold_nll(probs, gold)
    return torch.where(mask, nll, torch.zeros_like(nll)).sum() / count


def shift_loss(probs: Tensor, gold: Tensor, pair_mask: Optional[Tensor] = None) -> Tensor:
    """Cross-entropy averaged over every scored ordered pair, diagonal included."""
    if pair_mask is None:
        pair_mask = torch.ones(gold.shape, dtype=torch.bool, device=gold.device)
    count = pair_mask.sum()
    if count == 0:
        raise ValueError("batch contains no utterance pairs")
    nll = _gold_nll(probs, gold)
    return torch.where(pair_mask, nll, torch.zeros_like(nll)).sum() / count


def total_objective(
    emotion_loss: Tensor,
    shift: Optional[Tensor],
    config: ObjectiveConfig,
    log_vars: Optional[Tensor] = None,
) -> Tensor:
    if shift is None:
        return emotion_loss
    if config.lambda_mode == LambdaMode.MANUAL:
        return emotion_loss + config.lambda_value * shift
    if log_vars is None:
        raise ValueError("automatic weighting needs the two log-variance parameters")
    s_c, s_s = log_vars[0], log_vars[1]
    return (
        torch.exp(-s_c) * emotion_loss
        + torch.exp(-s_s) * shift
        + (s_c + s_s) / 2
    )


class ObjectiveWeighting(nn.Module):
    """Holds the learnable log-variances when the trade-off is automatic."""

    def __init__(self, config: ObjectiveConfig):
        super().__init__()
        self.config = config
        if config.lambda_mode == LambdaMode.AUTOMATIC:
            self.log_vars = nn.Parameter(torch.zeros(2))
        else:
            self.register_parameter("log_vars", None)

    def forward(self, emotion_loss: Tensor, shift: Optional[Tensor] = None) -> Tensor:
        return total_objective(emotion_loss, shift, self.config, self.log_vars)

    def weights(self) -> Optional[tuple[float, float]]:
        """Current effective (emotion, shift) weights, or None in manual mode."""
        if self.log_vars is None:
            return None
        w = torch.exp(-self.log_vars.detach())
        return float(w[0]), float(w[1])
