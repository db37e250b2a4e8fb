import logging
from pathlib import Path
from typing import NamedTuple, Optional

import torch
from pydantic import BaseModel, ConfigDict

from ..errors import ConfigError
from ..models.network import ShiftFusionNetwork, build_model
from ..models.settings import ModelConfig
from .losses import ObjectiveWeighting
from .metrics import MetricsReport
from .settings import ObjectiveConfig, TrainConfig

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class CheckpointHeader(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = CHECKPOINT_VERSION
    model: ModelConfig
    objective: ObjectiveConfig
    train: TrainConfig
    corpus_name: str
    label_names: list[str]
    best_epoch: Optional[int] = None
    best_metrics: Optional[MetricsReport] = None


class LoadedCheckpoint(NamedTuple):
    header: CheckpointHeader
    model: ShiftFusionNetwork
    objective: ObjectiveWeighting


def save_checkpoint(
    path: str | Path,
    header: CheckpointHeader,
    model: ShiftFusionNetwork,
    objective: ObjectiveWeighting,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "header": header.model_dump(mode="json"),
            "model": model.state_dict(),
            "objective": objective.state_dict(),
        },
        path,
    )
    logger.debug(f"Saved checkpoint for epoch {header.best_epoch} to {path}")
    return path


def load_checkpoint(path: str | Path) -> LoadedCheckpoint:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint {path} does not exist")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    header = CheckpointHeader.model_validate(payload["header"])
    if header.format_version != CHECKPOINT_VERSION:
        raise ConfigError(
            f"{path}: unsupported checkpoint format {header.format_version},"
            f" expected {CHECKPOINT_VERSION}"
        )
    model = build_model(header.model, header.train.precision.dtype)
    model.load_state_dict(payload["model"])
    model.eval()
    objective = ObjectiveWeighting(header.objective).to(header.train.precision.dtype)
    objective.load_state_dict(payload["objective"])
    return LoadedCheckpoint(header, model, objective)
