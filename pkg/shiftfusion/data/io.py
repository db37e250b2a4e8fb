"""Corpus files: a JSON manifest plus one JSON-lines file per split.

Each split line holds one conversation; feature vectors are base64-encoded
little-endian float32 bytes so that values round-trip bit-exactly. The
schema is documented in ``shiftfusion/data/FORMAT.md``.
"""

import base64
import binascii
import json
import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import CorpusValidationError
from .corpus import (
    DEFAULT_MAX_UTTERANCES,
    SPLITS,
    Conversation,
    Corpus,
    FeatureDims,
    Modality,
    Utterance,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_FLOAT = np.dtype("<f4")


class Manifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    name: str = "corpus"
    labels: list[str] = Field(min_length=1)
    dims: FeatureDims
    splits: dict[str, str] = Field(
        description="Split name -> JSON-lines file, relative to the manifest."
    )
    counts: Optional[dict[str, int]] = Field(
        default=None,
        description="Optional declared dialogue counts per split, checked on load.",
    )
    max_utterances: int = Field(default=DEFAULT_MAX_UTTERANCES, gt=0)


def encode_vector(vector: np.ndarray) -> str:
    return base64.b64encode(np.asarray(vector, dtype=_FLOAT).tobytes()).decode("ascii")


def decode_vector(text: str) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"), validate=True)
    if len(raw) % _FLOAT.itemsize:
        raise ValueError(f"{len(raw)} bytes is not a whole number of float32 values")
    return np.frombuffer(raw, dtype=_FLOAT).astype(np.float32)


def _parse_conversation(
    record: Any, where: str, manifest: Manifest, label_index: dict[str, int]
) -> Conversation:
    if not isinstance(record, dict):
        raise CorpusValidationError(
            f"{where}: expected a dialogue object, got {type(record).__name__}"
        )
    conv_id = record.get("id")
    if not isinstance(conv_id, str):
        raise CorpusValidationError(f"{where}: dialogue record has no string 'id'")
    raw_utterances = record.get("utterances") or []
    if not isinstance(raw_utterances, list):
        raise CorpusValidationError(f"{where}, dialogue {conv_id!r}: 'utterances' is not a list")
    if not raw_utterances:
        raise CorpusValidationError(f"{where}, dialogue {conv_id!r}: no utterances")
    if len(raw_utterances) > manifest.max_utterances:
        raise CorpusValidationError(
            f"{where}, dialogue {conv_id!r}: {len(raw_utterances)} utterances exceed"
            f" the limit of {manifest.max_utterances}"
        )

    utterances = []
    for i, raw in enumerate(raw_utterances):
        at = f"{where}, dialogue {conv_id!r}, utterance {i}"
        if not isinstance(raw, dict):
            raise CorpusValidationError(
                f"{at}: expected an utterance object, got {type(raw).__name__}"
            )
        label = raw.get("label")
        if not isinstance(label, str) or label not in label_index:
            raise CorpusValidationError(
                f"{at}: unknown label {label!r}; vocabulary is {manifest.labels}"
            )
        features = {}
        for modality in Modality:
            if raw.get(modality.value) is None:
                raise CorpusValidationError(f"{at}: missing {modality} feature vector")
            if not isinstance(raw[modality.value], str):
                raise CorpusValidationError(
                    f"{at}: {modality} features must be a base64 string,"
                    f" got {type(raw[modality.value]).__name__}"
                )
            try:
                vector = decode_vector(raw[modality.value])
            except (ValueError, binascii.Error) as e:
                raise CorpusValidationError(
                    f"{at}: cannot decode {modality} features ({e})"
                ) from e
            expected = manifest.dims.of(modality)
            if vector.shape[0] != expected:
                raise CorpusValidationError(
                    f"{at}: {modality} vector has {vector.shape[0]} values,"
                    f" expected {expected}"
                )
            features[modality.value] = vector
        utterances.append(
            Utterance(
                id=raw.get("id") or f"{conv_id}/{i}",
                speaker=str(raw.get("speaker", "")),
                label=label_index[label],
                **features,
            )
        )
    return Conversation(id=conv_id, utterances=utterances)


def _read_split(path: Path, split: str, manifest: Manifest) -> list[Conversation]:
    if not path.exists():
        raise CorpusValidationError(f"split {split!r}: file {path} does not exist")
    label_index = {label: i for i, label in enumerate(manifest.labels)}
    conversations = []
    with open(path, "r") as file:
        for line_no, line in enumerate(file, start=1):
            if not line.strip():
                continue
            where = f"split {split!r} ({path.name}:{line_no})"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusValidationError(f"{where}: invalid JSON ({e})") from e
            conversations.append(_parse_conversation(record, where, manifest, label_index))
    if not conversations:
        raise CorpusValidationError(
            f"{path}: split contains zero conversations"
        )
    return conversations


def load_corpus(manifest_path: str | Path) -> Corpus:
    """Read and fully validate a corpus from its manifest."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise CorpusValidationError(f"manifest {manifest_path} does not exist")
    try:
        with open(manifest_path, "r") as file:
            manifest = Manifest.model_validate(json.load(file))
    except (json.JSONDecodeError, ValidationError) as e:
        raise CorpusValidationError(f"manifest {manifest_path} is invalid: {e}") from e
    if manifest.format_version != FORMAT_VERSION:
        raise CorpusValidationError(
            f"manifest format version {manifest.format_version} is not supported"
            f" (expected {FORMAT_VERSION})"
        )

    splits = {}
    for split in SPLITS:
        if split not in manifest.splits:
            raise CorpusValidationError(f"manifest does not declare split {split!r}")
        splits[split] = _read_split(
            manifest_path.parent / manifest.splits[split], split, manifest
        )
        declared = (manifest.counts or {}).get(split)
        if declared is not None and declared != len(splits[split]):
            raise CorpusValidationError(
                f"split {split!r}: manifest declares {declared} dialogues,"
                f" file holds {len(splits[split])}"
            )

    corpus = Corpus(
        name=manifest.name,
        labels=manifest.labels,
        dims=manifest.dims,
        max_utterances=manifest.max_utterances,
        splits=splits,
    ).check()
    logger.info(
        f"Loaded corpus {corpus.name!r}: "
        + ", ".join(f"{s.split}={s.dialogues}/{s.utterances}" for s in corpus.summary())
    )
    return corpus


def write_corpus(corpus: Corpus, out_dir: str | Path) -> Path:
    """Write ``corpus`` in the manifest format and return the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(
        name=corpus.name,
        labels=corpus.labels,
        dims=corpus.dims,
        splits={split: f"{split}.jsonl" for split in SPLITS},
        counts={split: len(corpus.splits[split]) for split in SPLITS},
        max_utterances=corpus.max_utterances,
    )
    for split in SPLITS:
        with open(out_dir / manifest.splits[split], "w", newline="\n") as file:
            for conv in corpus.splits[split]:
                record = {
                    "id": conv.id,
                    "utterances": [
                        {
                            "id": u.id,
                            "speaker": u.speaker,
                            "label": corpus.labels[u.label],
                            **{m.value: encode_vector(u.features(m)) for m in Modality},
                        }
                        for u in conv.utterances
                    ],
                }
                file.write(json.dumps(record) + "\n")
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", newline="\n") as file:
        json.dump(manifest.model_dump(mode="json"), file, indent=2)
        file.write("\n")
    return manifest_path
