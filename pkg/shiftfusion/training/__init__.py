from .checkpoint import CHECKPOINT_VERSION, CheckpointHeader, LoadedCheckpoint, load_checkpoint, save_checkpoint
from .diagnostics import shift_emotion_correlation
from .evaluation import Predictions, check_compatible, evaluate, predict
from .losses import LOG_CLAMP, ObjectiveWeighting, classification_loss, shift_loss, total_objective
from .metrics import MetricsReport, compute_metrics, shift_f1
from .optim import build_optimizer, check_finite_gradients, optimizer_step
from .settings import LambdaMode, ObjectiveConfig, Precision, TrainConfig
from .trainer import EpochRecord, Trainer, TrainResult, train

__all__ = [
    "CHECKPOINT_VERSION",
    "LOG_CLAMP",
    "CheckpointHeader",
    "EpochRecord",
    "LambdaMode",
    "LoadedCheckpoint",
    "MetricsReport",
    "ObjectiveConfig",
    "ObjectiveWeighting",
    "Precision",
    "Predictions",
    "TrainConfig",
    "TrainResult",
    "Trainer",
    "build_optimizer",
    "check_compatible",
    "check_finite_gradients",
    "classification_loss",
    "compute_metrics",
    "evaluate",
    "load_checkpoint",
    "optimizer_step",
    "predict",
    "save_checkpoint",
    "shift_emotion_correlation",
    "shift_f1",
    "shift_loss",
    "total_objective",
    "train",
]
