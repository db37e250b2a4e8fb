from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
import torch
from torch import Tensor

from .corpus import Conversation, Modality
from .modal import ModalSetting, ModalTensor, modal_inputs
from .shift import shift_labels

PAD_LABEL = -1


@dataclass
class DialogueBatch:
    """Padded batch of dialogues arranged into the three encoder streams.

    ``streams[k]`` is ``[B, U, d]`` for the modality ``stream_modalities[k]``;
    slots fed by the same modality share one tensor.
    """

    streams: tuple[Tensor, Tensor, Tensor]
    stream_modalities: tuple[Modality, Modality, Modality]
    mask: Tensor
    lengths: Tensor
    labels: Tensor
    shift_labels: Tensor
    pair_mask: Tensor
    conversation_ids: list[str]
    utterance_ids: list[list[str]]

    @property
    def size(self) -> int:
        return len(self.conversation_ids)

    @property
    def num_utterances(self) -> int:
        return int(self.lengths.sum())

    def to(self, dtype: torch.dtype) -> "DialogueBatch":
        converted: dict[int, Tensor] = {}
        streams = tuple(
            converted.setdefault(id(s), s.to(dtype)) for s in self.streams
        )
        return DialogueBatch(
            streams=streams,  # type: ignore[arg-type]
            stream_modalities=self.stream_modalities,
            mask=self.mask,
            lengths=self.lengths,
            labels=self.labels,
            shift_labels=self.shift_labels,
            pair_mask=self.pair_mask,
            conversation_ids=self.conversation_ids,
            utterance_ids=self.utterance_ids,
        )


def _pad(matrices: Sequence[np.ndarray], length: int) -> Tensor:
    dim = matrices[0].shape[1]
    out = np.zeros((len(matrices), length, dim), dtype=np.float32)
    for b, m in enumerate(matrices):
        out[b, : m.shape[0]] = m
    return torch.from_numpy(out)


def collate(
    conversations: Sequence[Conversation],
    setting: ModalSetting = ModalSetting.TVA,
    dtype: torch.dtype = torch.float32,
) -> DialogueBatch:
    if not conversations:
        raise ValueError("cannot collate an empty batch")
    length = max(len(c) for c in conversations)
    per_dialogue = [modal_inputs(c, setting) for c in conversations]

    streams: dict[Modality, Tensor] = {}
    for slot, modality in enumerate(setting.streams):
        if modality not in streams:
            tensors: list[ModalTensor] = [inputs[slot] for inputs in per_dialogue]
            streams[modality] = _pad([t.data for t in tensors], length).to(dtype)

    batch = len(conversations)
    lengths = torch.tensor([len(c) for c in conversations], dtype=torch.int64)
    mask = torch.arange(length)[None, :] < lengths[:, None]
    labels = torch.full((batch, length), PAD_LABEL, dtype=torch.int64)
    shifts = torch.zeros((batch, length, length), dtype=torch.int64)
    for b, conv in enumerate(conversations):
        n = len(conv)
        labels[b, :n] = torch.tensor(conv.labels)
        shifts[b, :n, :n] = torch.from_numpy(shift_labels(conv.labels))

    return DialogueBatch(
        streams=tuple(streams[m] for m in setting.streams),  # type: ignore[arg-type]
        stream_modalities=setting.streams,
        mask=mask,
        lengths=lengths,
        labels=labels,
        shift_labels=shifts,
        pair_mask=mask[:, :, None] & mask[:, None, :],
        conversation_ids=[c.id for c in conversations],
        utterance_ids=[[u.id for u in c.utterances] for c in conversations],
    )


def iter_batches(
    conversations: Sequence[Conversation],
    batch_size: int,
    setting: ModalSetting = ModalSetting.TVA,
    dtype: torch.dtype = torch.float32,
    order: Optional[Sequence[int]] = None,
) -> Iterator[DialogueBatch]:
    """Yield padded batches in ``order`` (defaults to corpus order)."""
    if batch_size < 1:
        raise ValueError(f"batch size must be positive, got {batch_size}")
    indices = list(order) if order is not None else list(range(len(conversations)))
    for start in range(0, len(indices), batch_size):
        chunk = [conversations[i] for i in indices[start : start + batch_size]]
        yield collate(chunk, setting, dtype)
