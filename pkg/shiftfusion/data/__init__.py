from .batching import PAD_LABEL, DialogueBatch, collate, iter_batches
from .corpus import SPLITS, Conversation, Corpus, FeatureDims, Modality, Utterance
from .io import load_corpus, write_corpus
from .modal import ModalSetting, ModalTensor, modal_inputs
from .sentiment import (
    IEMOCAP_SENTIMENT,
    SentimentScheme,
    custom_scheme,
    get_scheme,
    map_to_sentiment,
)
from .shift import shift_labels
from .synth import SynthSpec, synth_corpus

__all__ = [
    "IEMOCAP_SENTIMENT",
    "PAD_LABEL",
    "SPLITS",
    "Conversation",
    "Corpus",
    "DialogueBatch",
    "FeatureDims",
    "ModalSetting",
    "ModalTensor",
    "Modality",
    "SentimentScheme",
    "SynthSpec",
    "Utterance",
    "collate",
    "custom_scheme",
    "get_scheme",
    "iter_batches",
    "load_corpus",
    "map_to_sentiment",
    "modal_inputs",
    "shift_labels",
    "synth_corpus",
    "write_corpus",
]
