from shiftfusion._compat import StrEnum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..data.corpus import Corpus, FeatureDims
from ..data.modal import ModalSetting


class FusionEncoder(StrEnum):
    CROSSMODAL = "crossmodal"
    # transformer encoder over the three streams stacked along utterances
    SEQUENCE_TRANSFORMER = "tfe1"
    # transformer encoder over the three streams concatenated along features
    FEATURE_TRANSFORMER = "tfe2"


class ArchitectureConfig(BaseModel):
    """Architecture hyperparameters that do not depend on the corpus."""

    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model_dim: int = Field(default=256, gt=0, description="Common width D of every stream.")
    num_heads: int = Field(default=8, gt=0, description="Heads in every attention network.")
    ff_dim: Optional[int] = Field(
        default=None, description="Feedforward hidden width; defaults to 4 * model_dim."
    )
    unimodal_depth: int = Field(default=2, ge=1)
    crossmodal_depth: int = Field(default=3, ge=1)
    unimodal_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    crossmodal_dropout: float = Field(default=0.3, ge=0.0, lt=1.0)
    head_hidden: Optional[int] = Field(
        default=None, description="Hidden width of both heads; defaults to model_dim."
    )
    head_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    shift_pair_cap: int = Field(
        default=512,
        gt=0,
        description=(
            "Dialogues longer than this evaluate the shift head on a uniform sample"
            " of cap * cap ordered pairs."
        ),
    )
    layer_norm_eps: float = Field(default=1e-5, gt=0.0)

    @model_validator(mode="after")
    def check_widths(self) -> "ArchitectureConfig":
        if self.model_dim % 2 != 0:
            raise ValueError(f"model_dim must be even for the bidirectional GRU, got {self.model_dim}")
        if self.model_dim % self.num_heads != 0:
            raise ValueError(
                f"model_dim {self.model_dim} is not divisible by {self.num_heads} heads"
            )
        return self

    @property
    def resolved_ff_dim(self) -> int:
        return self.ff_dim or 4 * self.model_dim

    @property
    def resolved_head_hidden(self) -> int:
        return self.head_hidden or self.model_dim

    @property
    def fused_dim(self) -> int:
        return 3 * self.model_dim


class ModelConfig(ArchitectureConfig):
    """Everything needed to build a network for one corpus."""

    dims: FeatureDims
    num_classes: int = Field(ge=2)
    modal_setting: ModalSetting = ModalSetting.TVA
    encoder: FusionEncoder = FusionEncoder.CROSSMODAL
    use_unimodal: bool = True
    use_crossmodal: bool = Field(
        default=True,
        description="When False the unimodal outputs are fused by concatenation only.",
    )
    use_shift: bool = True

    @classmethod
    def for_corpus(
        cls,
        corpus: Corpus,
        architecture: Optional[ArchitectureConfig] = None,
        **kwargs,
    ) -> "ModelConfig":
        base = (architecture or ArchitectureConfig()).model_dump()
        return cls(**base, dims=corpus.dims, num_classes=corpus.num_classes, **kwargs)
