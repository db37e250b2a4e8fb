import numpy as np
import pytest
import torch

from shiftfusion.data import (
    Conversation,
    Corpus,
    FeatureDims,
    SynthSpec,
    Utterance,
    synth_corpus,
)
from shiftfusion.models import ArchitectureConfig, ModelConfig

TINY_DIMS = FeatureDims(text=6, visual=5, audio=4)


def make_conversation(
    conv_id: str,
    labels: list[int],
    dims: FeatureDims = TINY_DIMS,
    seed: int = 0,
) -> Conversation:
    rng = np.random.default_rng(seed)
    return Conversation(
        id=conv_id,
        utterances=[
            Utterance(
                id=f"{conv_id}/{i}",
                speaker="AB"[i % 2],
                label=label,
                text=rng.standard_normal(dims.text).astype(np.float32),
                visual=rng.standard_normal(dims.visual).astype(np.float32),
                audio=rng.standard_normal(dims.audio).astype(np.float32),
            )
            for i, label in enumerate(labels)
        ],
    )


def make_corpus(labels: list[str], dialogues: dict[str, list[list[int]]]) -> Corpus:
    splits = {
        split: [
            make_conversation(f"{split}_{d}", seq, seed=100 * k + d)
            for d, seq in enumerate(seqs)
        ]
        for k, (split, seqs) in enumerate(dialogues.items())
    }
    return Corpus(name="handmade", labels=labels, dims=TINY_DIMS, splits=splits).check()


@pytest.fixture
def tiny_spec() -> SynthSpec:
    return SynthSpec(
        num_classes=3,
        train_dialogues=4,
        val_dialogues=2,
        test_dialogues=2,
        utterances_per_dialogue=4,
        dims=TINY_DIMS,
        shift_rate=0.5,
        seed=0,
    )


@pytest.fixture
def tiny_corpus(tiny_spec) -> Corpus:
    return synth_corpus(tiny_spec)


@pytest.fixture
def tiny_architecture() -> ArchitectureConfig:
    return ArchitectureConfig(
        model_dim=8,
        num_heads=2,
        ff_dim=16,
        unimodal_depth=1,
        crossmodal_depth=1,
        unimodal_dropout=0.0,
        crossmodal_dropout=0.0,
        head_dropout=0.0,
    )


@pytest.fixture
def tiny_model_config(tiny_corpus, tiny_architecture) -> ModelConfig:
    return ModelConfig.for_corpus(tiny_corpus, tiny_architecture)


@pytest.fixture(autouse=True)
def seeded():
    torch.manual_seed(0)
    yield
