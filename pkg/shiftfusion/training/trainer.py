import copy
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Optional

import numpy as np
import torch
from pydantic import BaseModel
from torch import Tensor, nn
from tqdm import tqdm

from ..data.batching import DialogueBatch, iter_batches
from ..data.corpus import Corpus
from ..errors import DivergenceError
from ..models.network import ShiftFusionNetwork, build_model
from ..models.settings import ModelConfig
from ..tensor.rng import RngState, derive_seed
from ..utils.logger import LossLogger
from .checkpoint import CheckpointHeader, save_checkpoint
from .diagnostics import shift_emotion_correlation
from .evaluation import evaluate
from .losses import ObjectiveWeighting, classification_loss, shift_loss
from .metrics import MetricsReport, shift_f1
from .optim import build_optimizer, optimizer_step
from .settings import ObjectiveConfig, TrainConfig

logger = logging.getLogger(__name__)

HISTORY_FILE = "history.jsonl"
CHECKPOINT_FILE = "best.pt"


class EpochRecord(BaseModel):
    """One line of the training history; contains no wall-clock values."""

    epoch: int
    emotion_loss: float
    shift_loss: Optional[float] = None
    total_loss: float
    train_shift_f1: Optional[float] = None
    val_accuracy: float
    val_weighted_f1: float
    val_macro_f1: float
    val_shift_f1: Optional[float] = None
    loss_weights: Optional[tuple[float, float]] = None
    best: bool = False


class StepResult(NamedTuple):
    emotion_loss: Tensor
    shift_loss: Optional[Tensor]
    total: Tensor
    num_pairs: int
    shift_preds: Optional[np.ndarray]
    shift_gold: Optional[np.ndarray]


@dataclass
class TrainResult:
    model: ShiftFusionNetwork
    objective: ObjectiveWeighting
    header: CheckpointHeader
    history: list[EpochRecord]
    best_epoch: int
    best_metrics: MetricsReport
    shift_emotion_correlation: Optional[float] = None
    checkpoint_path: Optional[Path] = None


class Trainer:
    """Epoch loop with seeded shuffling, dual-pass shift supervision and best-checkpoint selection."""

    def __init__(
        self,
        corpus: Corpus,
        model_config: ModelConfig,
        objective_config: Optional[ObjectiveConfig] = None,
        train_config: Optional[TrainConfig] = None,
        output_dir: Optional[str | Path] = None,
        loss_logger: Optional[LossLogger] = None,
    ):
        self.corpus = corpus
        self.model_config = model_config
        self.objective_config = objective_config or ObjectiveConfig()
        self.train_config = train_config or TrainConfig()
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.loss_logger = loss_logger or LossLogger()
        self.dtype = self.train_config.precision.dtype

        torch.manual_seed(self.train_config.seed)
        self.model = build_model(model_config, self.dtype)
        self.objective = ObjectiveWeighting(self.objective_config).to(self.dtype)
        self.optimizer = build_optimizer(
            self.model,
            self.train_config.learning_rate,
            self.objective_config.weight_decay,
            self.objective,
            self.train_config.betas,
            self.train_config.adam_eps,
        )
        self.history: list[EpochRecord] = []

    def named_parameters(self) -> Iterator[tuple[str, nn.Parameter]]:
        yield from self.model.named_parameters(prefix="model")
        yield from self.objective.named_parameters(prefix="objective")

    def epoch_order(self, epoch: int) -> list[int]:
        rng = np.random.default_rng([self.train_config.seed, epoch])
        return rng.permutation(len(self.corpus.split("train"))).tolist()

    def batch_rng(self, epoch: int, step: int) -> RngState:
        return RngState(derive_seed(self.train_config.seed, epoch, step))

    def train_step(self, batch: DialogueBatch, rng: RngState) -> StepResult:
        out = self.model(batch, rng=rng)
        emotion = classification_loss(out.emotion.probs, batch.labels)
        shift = None
        num_pairs = 0
        shift_preds = shift_gold = None
        if out.shift is not None:
            scored = out.shift.pair_mask
            shift = shift_loss(out.shift.probs, batch.shift_labels, scored)
            num_pairs = int(scored.sum())
            shift_preds = out.shift.preds[scored].detach().numpy()
            shift_gold = batch.shift_labels[scored].numpy()
        total = self.objective(emotion, shift)
        return StepResult(emotion, shift, total, num_pairs, shift_preds, shift_gold)

    def train_epoch(self, epoch: int) -> Optional[float]:
        """Run one epoch of updates; returns the pooled training shift F1."""
        self.model.train()
        self.loss_logger.reset()
        conversations = self.corpus.split("train")
        batches = iter_batches(
            conversations,
            self.train_config.batch_size,
            self.model_config.modal_setting,
            self.dtype,
            self.epoch_order(epoch),
        )
        num_batches = -(-len(conversations) // self.train_config.batch_size)
        shift_preds, shift_gold = [], []
        for step, batch in enumerate(
            tqdm(batches, total=num_batches, desc=f"epoch {epoch}", disable=not self.train_config.progress)
        ):
            result = self.train_step(batch, self.batch_rng(epoch, step))
            if not torch.isfinite(result.total):
                shift_text = f"{float(result.shift_loss):.6g}" if result.shift_loss is not None else "n/a"
                raise DivergenceError(
                    f"Non-finite loss at epoch {epoch}, batch {step}:"
                    f" L_c={float(result.emotion_loss):.6g}, L_s={shift_text}"
                )
            self.optimizer.zero_grad()
            result.total.backward()
            optimizer_step(self.optimizer, self.named_parameters())

            self.loss_logger.log_step(
                float(result.emotion_loss),
                batch.num_utterances,
                float(result.shift_loss) if result.shift_loss is not None else None,
                result.num_pairs,
                float(result.total),
            )
            if result.shift_preds is not None:
                shift_preds.append(result.shift_preds)
                shift_gold.append(result.shift_gold)

        if not shift_preds:
            return None
        return shift_f1(np.concatenate(shift_preds), np.concatenate(shift_gold))

    def validate(self) -> MetricsReport:
        return evaluate(
            self.model,
            self.corpus.split("val"),
            self.corpus.labels,
            self.train_config.eval_batch_size,
            self.dtype,
        )

    def header(
        self, best_epoch: Optional[int] = None, best_metrics: Optional[MetricsReport] = None
    ) -> CheckpointHeader:
        return CheckpointHeader(
            model=self.model_config,
            objective=self.objective_config,
            train=self.train_config,
            corpus_name=self.corpus.name,
            label_names=self.corpus.labels,
            best_epoch=best_epoch,
            best_metrics=best_metrics,
        )

    def fit(self) -> TrainResult:
        history_file = None
        checkpoint_path = None
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            history_file = open(self.output_dir / HISTORY_FILE, "w")

        best_f1 = float("-inf")
        best_epoch = 0
        best_metrics: Optional[MetricsReport] = None
        best_state = None
        try:
            for epoch in range(1, self.train_config.max_epochs + 1):
                started = time.perf_counter()
                train_shift_f1 = self.train_epoch(epoch)
                val = self.validate()
                # strict improvement; ties keep the earlier epoch
                is_best = val.weighted_f1 > best_f1
                record = EpochRecord(
                    epoch=epoch,
                    emotion_loss=self.loss_logger.emotion_loss,
                    shift_loss=self.loss_logger.shift_loss,
                    total_loss=self.loss_logger.total_loss,
                    train_shift_f1=train_shift_f1,
                    val_accuracy=val.accuracy,
                    val_weighted_f1=val.weighted_f1,
                    val_macro_f1=val.macro_f1,
                    val_shift_f1=val.shift_f1,
                    loss_weights=self.objective.weights(),
                    best=is_best,
                )
                self.history.append(record)
                self.loss_logger.log_epoch(epoch, val.weighted_f1, is_best)
                logger.debug(f"Epoch {epoch} took {time.perf_counter() - started:.2f}s")
                if history_file is not None:
                    history_file.write(json.dumps(record.model_dump(mode="json")) + "\n")
                    history_file.flush()

                if is_best:
                    best_f1, best_epoch, best_metrics = val.weighted_f1, epoch, val
                    best_state = (
                        copy.deepcopy(self.model.state_dict()),
                        copy.deepcopy(self.objective.state_dict()),
                    )
                    if self.output_dir is not None:
                        checkpoint_path = save_checkpoint(
                            self.output_dir / CHECKPOINT_FILE,
                            self.header(epoch, val),
                            self.model,
                            self.objective,
                        )
        finally:
            if history_file is not None:
                history_file.close()

        assert best_state is not None and best_metrics is not None
        self.model.load_state_dict(best_state[0])
        self.objective.load_state_dict(best_state[1])
        self.model.eval()

        correlation = shift_emotion_correlation(
            [r.val_shift_f1 for r in self.history],
            [r.val_weighted_f1 for r in self.history],
            best_epoch,
        )
        logger.info(
            f"Best epoch {best_epoch}: val W-F1 {best_metrics.weighted_f1:.4f},"
            f" accuracy {best_metrics.accuracy:.4f}"
        )
        return TrainResult(
            model=self.model,
            objective=self.objective,
            header=self.header(best_epoch, best_metrics),
            history=self.history,
            best_epoch=best_epoch,
            best_metrics=best_metrics,
            shift_emotion_correlation=correlation,
            checkpoint_path=checkpoint_path,
        )


def train(
    corpus: Corpus,
    model_config: ModelConfig,
    objective_config: Optional[ObjectiveConfig] = None,
    train_config: Optional[TrainConfig] = None,
    output_dir: Optional[str | Path] = None,
) -> TrainResult:
    return Trainer(corpus, model_config, objective_config, train_config, output_dir).fit()
