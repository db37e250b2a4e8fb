import logging
from typing import NamedTuple, Optional

import torch
from torch import Tensor, nn

from ..data.batching import DialogueBatch
from ..tensor.rng import RngState, use_rng
from .crossmodal import build_fusion_encoder
from .heads import ClassifierOutput, EmotionClassifier, ShiftClassifier, ShiftOutput
from .settings import ModelConfig
from .unimodal import InputProjection, Streams, UnimodalEncoder

logger = logging.getLogger(__name__)

# stream index handed to RngState.spawn for the second fusion pass
SHIFT_STREAM = 1


class ModelOutput(NamedTuple):
    fused: Tensor
    emotion: ClassifierOutput
    shift: Optional[ShiftOutput] = None
    fused_prime: Optional[Tensor] = None


class ShiftFusionNetwork(nn.Module):
    """Projection, recurrent unimodal encoding, fusion and the two heads.

    In training mode with the shift head enabled, fusion runs twice over the
    same unimodal output: the first pass feeds the emotion classifier, both
    passes feed the shift classifier. The second pass draws its dropout masks
    from its own stream so the first pass is unaffected by it.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        dim = config.model_dim
        ff_dim = config.resolved_ff_dim
        eps = config.layer_norm_eps

        self.projection = InputProjection(config.dims, dim)
        self.unimodal = (
            UnimodalEncoder(dim, ff_dim, config.unimodal_depth, config.unimodal_dropout, eps)
            if config.use_unimodal
            else None
        )
        self.fusion = (
            build_fusion_encoder(
                config.encoder,
                dim,
                config.num_heads,
                ff_dim,
                config.crossmodal_depth,
                config.crossmodal_dropout,
                eps,
            )
            if config.use_crossmodal
            else None
        )
        self.classifier = EmotionClassifier(
            config.fused_dim,
            config.resolved_head_hidden,
            config.num_classes,
            config.head_dropout,
        )
        # built last so the other parameters initialise identically with or without it
        self.shift_classifier = (
            ShiftClassifier(
                config.fused_dim,
                config.resolved_head_hidden,
                config.head_dropout,
                config.shift_pair_cap,
            )
            if config.use_shift
            else None
        )

    @property
    def recurrent_shift_input(self) -> bool:
        """True when the shift head consumes two unimodal passes instead of two fusions."""
        return self.fusion is None and self.unimodal is not None

    def encode_unimodal(self, batch: DialogueBatch) -> Streams:
        streams = self.projection(batch.streams, batch.stream_modalities)
        if self.unimodal is None:
            return streams
        return self.unimodal(streams, batch.lengths)

    def fuse(self, streams: Streams, mask: Optional[Tensor] = None) -> Tensor:
        if self.fusion is None:
            return torch.cat(streams, dim=-1)
        return self.fusion(streams, mask)

    def forward(
        self,
        batch: DialogueBatch,
        rng: Optional[RngState] = None,
        shift_rng: Optional[RngState] = None,
        with_shift: Optional[bool] = None,
    ) -> ModelOutput:
        if with_shift is None:
            with_shift = self.training
        with_shift = with_shift and self.shift_classifier is not None
        if shift_rng is None and rng is not None:
            shift_rng = rng.spawn(SHIFT_STREAM)

        with use_rng(rng):
            unimodal = self.encode_unimodal(batch)
            fused = self.fuse(unimodal, batch.mask)
            emotion = self.classifier(fused)
        if not with_shift:
            return ModelOutput(fused, emotion)

        with use_rng(shift_rng):
            if not self.training:
                fused_prime = fused
            elif self.recurrent_shift_input:
                fused_prime = self.fuse(self.encode_unimodal(batch), batch.mask)
            elif self.fusion is not None:
                fused_prime = self.fuse(unimodal, batch.mask)
            else:
                fused_prime = fused
            shift = self.shift_classifier(fused, fused_prime, batch.pair_mask)
        return ModelOutput(fused, emotion, shift, fused_prime)

    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())


def build_model(config: ModelConfig, dtype: torch.dtype = torch.float32) -> ShiftFusionNetwork:
    model = ShiftFusionNetwork(config).to(dtype)
    logger.info(
        f"Built {config.encoder.value} model ({config.modal_setting.value}) with"
        f" {model.num_parameters():,} parameters"
    )
    return model
