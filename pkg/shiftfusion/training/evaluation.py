from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch

from ..data.batching import iter_batches
from ..data.corpus import Conversation, Corpus
from ..errors import DimensionError
from ..models.network import ShiftFusionNetwork
from ..tensor.rng import RngState
from .metrics import MetricsReport, compute_metrics, shift_f1


@dataclass
class Predictions:
    """Per-utterance outputs of one eval-mode pass, in corpus order."""

    conversation_ids: list[str]
    utterance_ids: list[str]
    gold: np.ndarray
    preds: np.ndarray
    probs: np.ndarray
    embeddings: Optional[np.ndarray] = None
    shift_gold: Optional[np.ndarray] = None
    shift_preds: Optional[np.ndarray] = None

    @property
    def shift_f1(self) -> Optional[float]:
        if self.shift_preds is None or self.shift_gold is None:
            return None
        return shift_f1(self.shift_preds, self.shift_gold)


@torch.no_grad()
def predict(
    model: ShiftFusionNetwork,
    conversations: Sequence[Conversation],
    batch_size: int = 64,
    dtype: torch.dtype = torch.float32,
    with_shift: bool = True,
    with_embeddings: bool = False,
    seed: int = 0,
) -> Predictions:
    """Single forward pass per dialogue with dropout off.

    When the model has a shift head and ``with_shift`` is set, the head also
    scores the eval-mode fusion against itself. Pair sampling for dialogues
    over the pair cap is driven by ``seed``.
    """
    was_training = model.training
    model.eval()
    conv_ids, utt_ids = [], []
    gold, preds, probs, embeddings = [], [], [], []
    shift_gold, shift_preds = [], []
    rng = RngState(seed)
    try:
        for batch in iter_batches(
            conversations, batch_size, model.config.modal_setting, dtype
        ):
            out = model(batch, rng=rng, with_shift=with_shift)
            mask = batch.mask
            gold.append(batch.labels[mask].numpy())
            preds.append(out.emotion.preds[mask].numpy())
            probs.append(out.emotion.probs[mask].float().numpy())
            if with_embeddings:
                embeddings.append(out.fused[mask].float().numpy())
            if out.shift is not None:
                scored = out.shift.pair_mask
                shift_gold.append(batch.shift_labels[scored].numpy())
                shift_preds.append(out.shift.preds[scored].numpy())
            for conv_id, ids in zip(batch.conversation_ids, batch.utterance_ids, strict=True):
                conv_ids.extend([conv_id] * len(ids))
                utt_ids.extend(ids)
    finally:
        model.train(was_training)

    return Predictions(
        conversation_ids=conv_ids,
        utterance_ids=utt_ids,
        gold=np.concatenate(gold),
        preds=np.concatenate(preds),
        probs=np.concatenate(probs),
        embeddings=np.concatenate(embeddings) if embeddings else None,
        shift_gold=np.concatenate(shift_gold) if shift_gold else None,
        shift_preds=np.concatenate(shift_preds) if shift_preds else None,
    )


def evaluate(
    model: ShiftFusionNetwork,
    conversations: Sequence[Conversation],
    label_names: Sequence[str],
    batch_size: int = 64,
    dtype: torch.dtype = torch.float32,
) -> MetricsReport:
    predictions = predict(model, conversations, batch_size, dtype)
    return compute_metrics(
        predictions.gold, predictions.preds, label_names, predictions.shift_f1
    )


def check_compatible(model: ShiftFusionNetwork, corpus: Corpus) -> None:
    expected = model.config.dims
    if expected != corpus.dims:
        raise DimensionError(
            f"checkpoint expects feature dims text={expected.text} visual={expected.visual}"
            f" audio={expected.audio}, corpus {corpus.name!r} has text={corpus.dims.text}"
            f" visual={corpus.dims.visual} audio={corpus.dims.audio}"
        )
    if model.config.num_classes != corpus.num_classes:
        raise DimensionError(
            f"checkpoint expects {model.config.num_classes} classes,"
            f" corpus {corpus.name!r} has {corpus.num_classes}"
        )
