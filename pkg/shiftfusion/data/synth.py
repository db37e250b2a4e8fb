import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .corpus import SPLITS, Conversation, Corpus, FeatureDims, Modality, Utterance

logger = logging.getLogger(__name__)


class SynthSpec(BaseModel):
    """Recipe for a Gaussian-cluster corpus with controllable emotion shifts."""

    model_config = ConfigDict(extra="forbid")

    num_classes: int = Field(default=4, gt=0)
    train_dialogues: int = Field(default=60, gt=0)
    val_dialogues: int = Field(default=10, gt=0)
    test_dialogues: int = Field(default=10, gt=0)
    utterances_per_dialogue: int = Field(default=10, gt=0)
    dims: FeatureDims = FeatureDims(text=16, visual=8, audio=8)
    separation: float = Field(
        default=3.0,
        gt=0,
        description="Distance of each class centre from the origin, in units of noise.",
    )
    noise: float = Field(default=1.0, gt=0, description="Per-dimension noise std.")
    shift_rate: float = Field(
        default=0.4,
        ge=0.0,
        le=1.0,
        description="Probability that consecutive utterances change emotion.",
    )
    seed: int = 0
    label_names: Optional[list[str]] = None

    @model_validator(mode="after")
    def check_label_names(self) -> "SynthSpec":
        if self.label_names is not None and len(self.label_names) != self.num_classes:
            raise ValueError(
                f"{len(self.label_names)} label names given for {self.num_classes} classes"
            )
        return self

    def dialogues(self, split: str) -> int:
        return getattr(self, f"{split}_dialogues")


def _class_centres(
    rng: np.random.Generator, num_classes: int, dim: int, radius: float
) -> np.ndarray:
    if num_classes <= dim:
        # orthonormal directions keep every pair of centres equally far apart
        q, _ = np.linalg.qr(rng.standard_normal((dim, num_classes)))
        directions = q.T
    else:
        directions = rng.standard_normal((num_classes, dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return directions * radius


def _label_sequence(rng: np.random.Generator, spec: SynthSpec) -> list[int]:
    labels = [int(rng.integers(spec.num_classes))]
    for _ in range(spec.utterances_per_dialogue - 1):
        current = labels[-1]
        if spec.num_classes > 1 and rng.random() < spec.shift_rate:
            others = [c for c in range(spec.num_classes) if c != current]
            current = others[int(rng.integers(len(others)))]
        labels.append(current)
    return labels


def synth_corpus(spec: SynthSpec) -> Corpus:
    """Generate a corpus that is a pure function of ``spec`` (seed included)."""
    rng = np.random.default_rng(spec.seed)
    radius = spec.separation * spec.noise
    centres = {
        m: _class_centres(rng, spec.num_classes, spec.dims.of(m), radius) for m in Modality
    }

    splits: dict[str, list[Conversation]] = {}
    for split in SPLITS:
        conversations = []
        for d in range(spec.dialogues(split)):
            conv_id = f"{split}_{d:04d}"
            utterances = []
            for j, label in enumerate(_label_sequence(rng, spec)):
                features = {
                    m.value: (
                        centres[m][label] + rng.normal(0.0, spec.noise, spec.dims.of(m))
                    ).astype(np.float32)
                    for m in Modality
                }
                utterances.append(
                    Utterance(
                        id=f"{conv_id}/{j}",
                        speaker="AB"[j % 2],
                        label=label,
                        **features,
                    )
                )
            conversations.append(Conversation(id=conv_id, utterances=utterances))
        splits[split] = conversations

    labels = spec.label_names or [f"class_{c}" for c in range(spec.num_classes)]
    logger.debug(f"Synthesised corpus with {spec.num_classes} classes, seed {spec.seed}")
    return Corpus(
        name=f"synthetic-{spec.seed}",
        labels=labels,
        dims=spec.dims,
        max_utterances=max(spec.utterances_per_dialogue, 512),
        splits=splits,
    ).check()
