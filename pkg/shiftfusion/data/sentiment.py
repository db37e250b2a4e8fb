import logging

from pydantic import BaseModel, ConfigDict, Field

from .corpus import Conversation, Corpus

logger = logging.getLogger(__name__)


class SentimentScheme(BaseModel):
    """Many-to-one relabelling of an emotion vocabulary."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    targets: list[str] = Field(min_length=1)
    mapping: dict[str, str] = Field(
        description="Source label (matched case-insensitively) -> target label."
    )

    def target_of(self, label: str) -> str:
        lookup = {k.lower(): v for k, v in self.mapping.items()}
        target = lookup.get(label.lower())
        if target is None:
            raise ValueError(f"sentiment scheme {self.name!r} does not map label {label!r}")
        if target not in self.targets:
            raise ValueError(
                f"sentiment scheme {self.name!r} maps {label!r} to unknown target {target!r}"
            )
        return target


IEMOCAP_SENTIMENT = SentimentScheme(
    name="iemocap",
    targets=["negative", "neutral", "positive"],
    mapping={
        "sad": "negative",
        "angry": "negative",
        "ang": "negative",
        "frustrated": "negative",
        "fru": "negative",
        "happy": "positive",
        "hap": "positive",
        "excited": "positive",
        "exc": "positive",
        "neutral": "neutral",
        "neu": "neutral",
    },
)


def identity_scheme(labels: list[str]) -> SentimentScheme:
    return SentimentScheme(
        name="identity", targets=list(labels), mapping={label: label for label in labels}
    )


def custom_scheme(mapping: dict[str, str]) -> SentimentScheme:
    targets = list(dict.fromkeys(mapping.values()))
    return SentimentScheme(name="custom", targets=targets, mapping=dict(mapping))


def get_scheme(name: str | dict[str, str], labels: list[str]) -> SentimentScheme:
    if isinstance(name, dict):
        return custom_scheme(name)
    if name == "iemocap":
        return IEMOCAP_SENTIMENT
    if name == "identity":
        return identity_scheme(labels)
    raise ValueError(f"unknown sentiment scheme {name!r}; expected 'iemocap' or 'identity'")


def map_to_sentiment(corpus: Corpus, scheme: SentimentScheme) -> Corpus:
    """Relabel every utterance of ``corpus`` through ``scheme``."""
    index = {
        i: scheme.targets.index(scheme.target_of(label))
        for i, label in enumerate(corpus.labels)
    }
    splits = {
        split: [
            Conversation(
                id=conv.id,
                utterances=[
                    u.model_copy(update={"label": index[u.label]})
                    for u in conv.utterances
                ],
            )
            for conv in conversations
        ]
        for split, conversations in corpus.splits.items()
    }
    logger.info(
        f"Mapped {len(corpus.labels)} labels to {len(scheme.targets)} with scheme"
        f" {scheme.name!r}"
    )
    return corpus.model_copy(update={"labels": list(scheme.targets), "splits": splits}).check()
