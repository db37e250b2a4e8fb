import logging
from typing import Iterable, Optional

import torch
from torch import nn

from ..errors import NonFiniteGradientError

logger = logging.getLogger(__name__)


def build_optimizer(
    model: nn.Module,
    learning_rate: float,
    weight_decay: float,
    objective: Optional[nn.Module] = None,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> torch.optim.AdamW:
    """AdamW over the model; objective weighting parameters are never decayed."""
    groups = [{"params": list(model.parameters()), "weight_decay": weight_decay}]
    extra = list(objective.parameters()) if objective is not None else []
    if extra:
        groups.append({"params": extra, "weight_decay": 0.0})
    logger.debug(f"AdamW over {len(groups)} parameter groups, lr={learning_rate}")
    return torch.optim.AdamW(groups, lr=learning_rate, betas=betas, eps=eps)


def check_finite_gradients(named_parameters: Iterable[tuple[str, nn.Parameter]]) -> None:
    for name, param in named_parameters:
        if param.grad is not None and not torch.isfinite(param.grad).all():
            raise NonFiniteGradientError(name)


def optimizer_step(
    optimizer: torch.optim.Optimizer,
    named_parameters: Iterable[tuple[str, nn.Parameter]],
) -> None:
    check_finite_gradients(named_parameters)
    optimizer.step()
