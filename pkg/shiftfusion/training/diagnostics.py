import logging
import math
from typing import Optional, Sequence

from scipy.stats import spearmanr

logger = logging.getLogger(__name__)


def shift_emotion_correlation(
    shift_scores: Sequence[Optional[float]],
    emotion_scores: Sequence[float],
    best_epoch: Optional[int] = None,
) -> Optional[float]:
    """Spearman correlation of per-epoch shift F1 and emotion weighted F1.

    Epochs are 1-based; only epochs up to ``best_epoch`` are used. Returns None
    when fewer than three epochs have both scores or either series is constant.
    """
    stop = len(emotion_scores) if best_epoch is None else best_epoch
    pairs = [
        (s, e)
        for s, e in zip(shift_scores[:stop], emotion_scores[:stop], strict=True)
        if s is not None
    ]
    if len(pairs) < 3:
        return None
    shift, emotion = zip(*pairs, strict=True)
    if len(set(shift)) < 2 or len(set(emotion)) < 2:
        logger.debug("Constant score series; correlation undefined")
        return None
    rho = float(spearmanr(shift, emotion).statistic)
    return None if math.isnan(rho) else rho
