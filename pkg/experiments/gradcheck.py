import logging
from typing import Optional

import torch

from shiftfusion.data import collate
from shiftfusion.errors import ConfigError
from shiftfusion.models import FusionEncoder, build_model
from shiftfusion.tensor import GradCheckReport, RngState, grad_check
from shiftfusion.training import (
    LambdaMode,
    ObjectiveWeighting,
    classification_loss,
    shift_loss,
)

from .config import ExperimentConfig

logger = logging.getLogger(__name__)

MAX_MODEL_DIM = 8
MAX_UTTERANCES = 4
MAX_CLASSES = 3
NUM_DIALOGUES = 2


def all_variants() -> list[tuple[FusionEncoder, LambdaMode]]:
    return [(encoder, mode) for encoder in FusionEncoder for mode in LambdaMode]


def check_model_gradients(
    config: ExperimentConfig,
    encoder: Optional[FusionEncoder] = None,
    lambda_mode: Optional[LambdaMode] = None,
    eps: float = 1e-6,
    tolerance: float = 1e-4,
    max_entries: Optional[int] = 16,
    degenerate: bool = False,
) -> GradCheckReport:
    """Finite-difference check of the full training objective on a tiny model.

    Runs in float64 with every dropout rate forced to zero, over the first
    training dialogues of the configured corpus. ``degenerate`` multiplies
    the objective by zero, so every gradient must come out exactly zero.
    """
    corpus = config.corpus.load()
    dialogues = corpus.split("train")[:NUM_DIALOGUES]
    longest = max(len(c) for c in dialogues)
    if config.architecture.model_dim > MAX_MODEL_DIM:
        raise ConfigError(
            f"gradient check needs model_dim <= {MAX_MODEL_DIM}, got {config.architecture.model_dim}"
        )
    if longest > MAX_UTTERANCES:
        raise ConfigError(
            f"gradient check needs dialogues of at most {MAX_UTTERANCES} utterances, got {longest}"
        )
    if corpus.num_classes > MAX_CLASSES:
        raise ConfigError(
            f"gradient check needs at most {MAX_CLASSES} classes, got {corpus.num_classes}"
        )

    model_config = config.model_config_for(corpus).model_copy(
        update={
            "encoder": encoder or config.encoder,
            "unimodal_dropout": 0.0,
            "crossmodal_dropout": 0.0,
            "head_dropout": 0.0,
        }
    )
    objective_config = config.objective.model_copy(
        update={"lambda_mode": lambda_mode or config.objective.lambda_mode}
    )
    torch.manual_seed(config.train.seed)
    model = build_model(model_config, torch.float64)
    model.train()
    objective = ObjectiveWeighting(objective_config).to(torch.float64)
    batch = collate(dialogues, model_config.modal_setting, torch.float64)

    def loss_fn() -> torch.Tensor:
        out = model(batch, rng=RngState(config.train.seed))
        emotion = classification_loss(out.emotion.probs, batch.labels)
        shift = (
            shift_loss(out.shift.probs, batch.shift_labels, out.shift.pair_mask)
            if out.shift is not None
            else None
        )
        total = objective(emotion, shift)
        return total * 0.0 if degenerate else total

    params = [
        *model.named_parameters(prefix="model"),
        *objective.named_parameters(prefix="objective"),
    ]
    logger.info(
        f"Checking {len(params)} tensors of the {model_config.encoder.value} model"
        f" with {objective_config.lambda_mode.value} weighting"
    )
    return grad_check(
        loss_fn,
        params,
        eps=eps,
        tolerance=tolerance,
        max_entries=max_entries,
        seed=config.train.seed,
    )
