from shiftfusion._compat import StrEnum
from typing import Any

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
)

from ..errors import CorpusValidationError

SPLITS = ("train", "val", "test")
DEFAULT_MAX_UTTERANCES = 512


class Modality(StrEnum):
    TEXT = "text"
    VISUAL = "visual"
    AUDIO = "audio"


class FeatureDims(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    text: int = Field(gt=0)
    visual: int = Field(gt=0)
    audio: int = Field(gt=0)

    def of(self, modality: Modality) -> int:
        return getattr(self, modality.value)


class Utterance(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    id: str
    speaker: str = ""
    label: int = Field(ge=0, description="Index into the corpus label vocabulary.")
    text: np.ndarray = Field(repr=False)
    visual: np.ndarray = Field(repr=False)
    audio: np.ndarray = Field(repr=False)

    @field_validator("text", "visual", "audio", mode="before")
    @classmethod
    def as_float_vector(cls, value: Any) -> np.ndarray:
        array = np.asarray(value, dtype=np.float32)
        if array.ndim != 1:
            raise ValueError(f"feature vector must be 1-D, got shape {array.shape}")
        return array

    def features(self, modality: Modality) -> np.ndarray:
        return getattr(self, modality.value)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Utterance):
            return NotImplemented
        return (
            self.id == other.id
            and self.speaker == other.speaker
            and self.label == other.label
            and all(
                np.array_equal(self.features(m), other.features(m)) for m in Modality
            )
        )

    __hash__ = None  # type: ignore[assignment]


class Conversation(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    utterances: list[Utterance] = Field(min_length=1)

    def __len__(self) -> int:
        return len(self.utterances)

    @property
    def labels(self) -> list[int]:
        return [u.label for u in self.utterances]

    def matrix(self, modality: Modality) -> np.ndarray:
        return np.stack([u.features(modality) for u in self.utterances])


class SplitSummary(BaseModel):
    split: str
    dialogues: int
    utterances: int


class Corpus(BaseModel):
    """Train/val/test dialogues sharing one label vocabulary and feature dims."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "corpus"
    labels: list[str] = Field(min_length=1)
    dims: FeatureDims
    max_utterances: int = Field(default=DEFAULT_MAX_UTTERANCES, gt=0)
    splits: dict[str, list[Conversation]]

    def check(self) -> "Corpus":
        """Validate vocabulary, splits, lengths, labels and feature dims."""
        if len(set(self.labels)) != len(self.labels):
            raise CorpusValidationError(f"duplicate labels in vocabulary {self.labels}")
        missing = [s for s in SPLITS if s not in self.splits]
        if missing:
            raise CorpusValidationError(f"corpus is missing splits {missing}")
        unknown = [s for s in self.splits if s not in SPLITS]
        if unknown:
            raise CorpusValidationError(f"unknown splits {unknown}; expected {SPLITS}")
        for split in SPLITS:
            conversations = self.splits[split]
            if not conversations:
                raise CorpusValidationError(
                    f"split {split!r}: split contains zero conversations"
                )
            for conv in conversations:
                self._check_conversation(split, conv)
        return self

    def _check_conversation(self, split: str, conv: Conversation) -> None:
        if len(conv) > self.max_utterances:
            raise CorpusValidationError(
                f"split {split!r}, dialogue {conv.id!r}: {len(conv)} utterances"
                f" exceed the limit of {self.max_utterances}"
            )
        for i, utt in enumerate(conv.utterances):
            if utt.label >= len(self.labels):
                raise CorpusValidationError(
                    f"split {split!r}, dialogue {conv.id!r}, utterance {i}:"
                    f" label index {utt.label} outside vocabulary of size"
                    f" {len(self.labels)}"
                )
            for modality in Modality:
                size = utt.features(modality).shape[0]
                expected = self.dims.of(modality)
                if size != expected:
                    raise CorpusValidationError(
                        f"split {split!r}, dialogue {conv.id!r}, utterance {i}:"
                        f" {modality} vector has {size} values, expected {expected}"
                    )

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def split(self, name: str) -> list[Conversation]:
        if name not in self.splits:
            raise KeyError(f"unknown split {name!r}; expected one of {SPLITS}")
        return self.splits[name]

    def summary(self) -> list[SplitSummary]:
        return [
            SplitSummary(
                split=name,
                dialogues=len(self.splits[name]),
                utterances=sum(len(c) for c in self.splits[name]),
            )
            for name in SPLITS
        ]
