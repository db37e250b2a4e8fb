from shiftfusion._compat import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .corpus import Conversation, Modality

_STREAMS = {
    "TVA": (Modality.TEXT, Modality.VISUAL, Modality.AUDIO),
    "TV": (Modality.TEXT, Modality.VISUAL, Modality.VISUAL),
    "TA": (Modality.TEXT, Modality.AUDIO, Modality.AUDIO),
    "VA": (Modality.VISUAL, Modality.AUDIO, Modality.AUDIO),
    "T": (Modality.TEXT,) * 3,
    "V": (Modality.VISUAL,) * 3,
    "A": (Modality.AUDIO,) * 3,
}


class ModalSetting(StrEnum):
    """Which modality feeds each of the three encoder streams.

    Stream 1 plays the textual role inside the cross-modal encoder. In the
    text-free ``VA`` setting the visual stream takes that role.
    """

    TVA = "TVA"
    TV = "TV"
    TA = "TA"
    VA = "VA"
    T = "T"
    V = "V"
    A = "A"

    @property
    def streams(self) -> tuple[Modality, Modality, Modality]:
        return _STREAMS[self.value]


class ModalTensor(BaseModel):
    """Utterance-by-feature matrix of one modality for one dialogue."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    modality: Modality
    data: np.ndarray = Field(repr=False)
    mask: np.ndarray = Field(repr=False, description="Boolean validity per utterance.")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


def modal_inputs(
    conv: Conversation, setting: ModalSetting
) -> tuple[ModalTensor, ModalTensor, ModalTensor]:
    """Arrange a dialogue's modalities into the three encoder streams.

    A modality that appears in several slots is the same object in each;
    distinct modalities are always distinct objects.
    """
    built: dict[Modality, ModalTensor] = {}
    for modality in setting.streams:
        if modality not in built:
            built[modality] = ModalTensor(
                modality=modality,
                data=conv.matrix(modality),
                mask=np.ones(len(conv), dtype=bool),
            )
    first, second, third = (built[m] for m in setting.streams)
    return first, second, third
