from shiftfusion._compat import StrEnum

import torch
from pydantic import BaseModel, ConfigDict, Field


class LambdaMode(StrEnum):
    MANUAL = "manual"
    AUTOMATIC = "automatic"


class Precision(StrEnum):
    FLOAT32 = "float32"
    FLOAT64 = "float64"

    @property
    def dtype(self) -> torch.dtype:
        return torch.float64 if self is Precision.FLOAT64 else torch.float32


class ObjectiveConfig(BaseModel):
    """How the emotion and shift losses are combined."""

    model_config = ConfigDict(extra="forbid")

    lambda_mode: LambdaMode = Field(
        default=LambdaMode.MANUAL,
        description="manual: L_c + lambda * L_s; automatic: learned log-variance weighting.",
    )
    lambda_value: float = Field(
        default=1.0, ge=0.0, le=1.0, description="Shift-loss weight in manual mode."
    )
    weight_decay: float = Field(
        default=1e-4,
        ge=0.0,
        description="L2 factor, applied as decoupled weight decay by the optimizer.",
    )


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=1e-5, gt=0.0)
    batch_size: int = Field(default=64, gt=0, description="Dialogues per batch.")
    eval_batch_size: int = Field(default=64, gt=0)
    max_epochs: int = Field(default=80, gt=0)
    seed: int = 0
    precision: Precision = Precision.FLOAT32
    betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    progress: bool = Field(default=False, description="Show tqdm progress bars.")
