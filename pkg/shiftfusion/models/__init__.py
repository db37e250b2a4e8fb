from .crossmodal import (
    CrossModalEncoder,
    CrossModalLayer,
    TransformerFusionEncoder,
    TransformerLayer,
    build_fusion_encoder,
)
from .heads import (
    ClassifierOutput,
    EmotionClassifier,
    ShiftClassifier,
    ShiftOutput,
    build_shift_tensor,
    sample_pair_mask,
)
from .network import ModelOutput, ShiftFusionNetwork, build_model
from .settings import ArchitectureConfig, FusionEncoder, ModelConfig
from .unimodal import InputProjection, UnimodalEncoder, UnimodalLayer

__all__ = [
    "ArchitectureConfig",
    "ClassifierOutput",
    "CrossModalEncoder",
    "CrossModalLayer",
    "EmotionClassifier",
    "FusionEncoder",
    "InputProjection",
    "ModelConfig",
    "ModelOutput",
    "ShiftClassifier",
    "ShiftFusionNetwork",
    "ShiftOutput",
    "TransformerFusionEncoder",
    "TransformerLayer",
    "UnimodalEncoder",
    "UnimodalLayer",
    "build_fusion_encoder",
    "build_model",
    "sample_pair_mask",
    "build_shift_tensor",
]
