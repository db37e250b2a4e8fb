import logging
from typing import Optional

from pydantic import BaseModel, ConfigDict


class LossLogger(BaseModel):
    """Accumulates utterance- and pair-weighted losses over an epoch."""

    logger: logging.Logger
    _emotion_sum: float = 0
    _emotion_count: int = 0
    _shift_sum: float = 0
    _shift_count: int = 0
    _total_sum: float = 0
    _steps: int = 0
    _STY_COLOR = "\033[38;5;69m"
    _STY_BEST_COLOR = "\033[38;5;46m"
    _STY_RESET = "\033[0m"

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def __init__(self, name: Optional[str] = "shiftfusion-loss"):
        super(LossLogger, self).__init__(logger=logging.getLogger(name))

    def log_step(
        self,
        emotion_loss: float,
        num_utterances: int,
        shift_loss: Optional[float] = None,
        num_pairs: int = 0,
        total: Optional[float] = None,
    ):
        self._emotion_sum += emotion_loss * num_utterances
        self._emotion_count += num_utterances
        if shift_loss is not None and num_pairs:
            self._shift_sum += shift_loss * num_pairs
            self._shift_count += num_pairs
        self._total_sum += emotion_loss if total is None else total
        self._steps += 1
        self.logger.debug(
            f"step {self._steps}: L_c={emotion_loss:.4f}"
            + (f" L_s={shift_loss:.4f}" if shift_loss is not None else "")
        )

    def reset(self):
        self._emotion_sum = 0
        self._emotion_count = 0
        self._shift_sum = 0
        self._shift_count = 0
        self._total_sum = 0
        self._steps = 0

    @property
    def emotion_loss(self) -> float:
        return self._emotion_sum / self._emotion_count if self._emotion_count else 0.0

    @property
    def shift_loss(self) -> Optional[float]:
        return self._shift_sum / self._shift_count if self._shift_count else None

    @property
    def total_loss(self) -> float:
        return self._total_sum / self._steps if self._steps else 0.0

    def log_epoch(self, epoch: int, val_weighted_f1: float, best: bool = False):
        shift = self.shift_loss
        color = self._STY_BEST_COLOR if best else self._STY_COLOR
        self.logger.info(
            f"{color}Epoch {epoch}: L_c={self.emotion_loss:.4f}"
            + (f" L_s={shift:.4f}" if shift is not None else "")
            + f" total={self.total_loss:.4f} val W-F1={val_weighted_f1:.4f}"
            + (" (best)" if best else "")
            + self._STY_RESET
        )
