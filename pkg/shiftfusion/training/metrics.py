from typing import Optional, Sequence

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict
from sklearn.metrics import confusion_matrix, f1_score
from tabulate import tabulate


class MetricsReport(BaseModel):
    """Utterance-level emotion metrics, plus shift F1 when it was measured."""

    model_config = ConfigDict(extra="forbid")

    num_utterances: int
    accuracy: float
    weighted_f1: float
    macro_f1: float
    per_class_f1: list[float]
    supports: list[int]
    confusion: list[list[int]]
    label_names: list[str]
    shift_f1: Optional[float] = None

    def normalized_confusion(self) -> list[list[float]]:
        """Rows as proportions of each gold class; empty classes stay zero."""
        counts = np.asarray(self.confusion, dtype=np.float64)
        totals = counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            rows = np.where(totals > 0, counts / totals, 0.0)
        return rows.tolist()

    def per_class(self) -> dict[str, float]:
        return dict(zip(self.label_names, self.per_class_f1, strict=True))

    def to_table(self) -> str:
        rows = [
            [name, support, f"{f1:.4f}"]
            for name, support, f1 in zip(
                self.label_names, self.supports, self.per_class_f1, strict=True
            )
        ]
        summary = [
            ["accuracy", self.num_utterances, f"{self.accuracy:.4f}"],
            ["weighted F1", self.num_utterances, f"{self.weighted_f1:.4f}"],
            ["macro F1", self.num_utterances, f"{self.macro_f1:.4f}"],
        ]
        if self.shift_f1 is not None:
            summary.append(["shift F1", "", f"{self.shift_f1:.4f}"])
        return tabulate(rows + summary, headers=["class", "support", "score"])


def _flat(values: torch.Tensor | np.ndarray | Sequence[int]) -> np.ndarray:
    if isinstance(values, torch.Tensor):
        values = values.detach().cpu().numpy()
    return np.asarray(values, dtype=np.int64).reshape(-1)


def compute_metrics(
    gold: torch.Tensor | np.ndarray | Sequence[int],
    preds: torch.Tensor | np.ndarray | Sequence[int],
    label_names: Sequence[str],
    shift_f1: Optional[float] = None,
) -> MetricsReport:
    y_true, y_pred = _flat(gold), _flat(preds)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"{y_true.size} gold labels but {y_pred.size} predictions")
    if y_true.size == 0:
        raise ValueError("cannot score an empty prediction set")
    labels = list(range(len(label_names)))
    counts = confusion_matrix(y_true, y_pred, labels=labels)
    per_class = f1_score(y_true, y_pred, labels=labels, average=None, zero_division=0.0)
    return MetricsReport(
        num_utterances=int(y_true.size),
        accuracy=float(np.trace(counts) / y_true.size),
        weighted_f1=float(
            f1_score(y_true, y_pred, labels=labels, average="weighted", zero_division=0.0)
        ),
        # classes absent from both gold and predictions do not count
        macro_f1=float(f1_score(y_true, y_pred, average="macro", zero_division=0.0)),
        per_class_f1=[float(v) for v in per_class],
        supports=[int(v) for v in counts.sum(axis=1)],
        confusion=counts.tolist(),
        label_names=list(label_names),
        shift_f1=shift_f1,
    )


def shift_f1(
    preds: torch.Tensor | np.ndarray,
    gold: torch.Tensor | np.ndarray,
    pair_mask: Optional[torch.Tensor | np.ndarray] = None,
) -> float:
    """Binary F1 of the shift class pooled over every scored ordered pair.

    With no true shifts and none predicted the score is 1.0.
    """
    y_pred, y_true = _flat(preds), _flat(gold)
    if pair_mask is not None:
        keep = _flat(pair_mask).astype(bool)
        y_pred, y_true = y_pred[keep], y_true[keep]
    if y_true.size == 0:
        raise ValueError("no pairs to score")
    return float(f1_score(y_true, y_pred, labels=[0, 1], pos_label=1, zero_division=1.0))
