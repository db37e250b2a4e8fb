from typing import Hashable, Sequence

import numpy as np


def shift_labels(labels: Sequence[Hashable]) -> np.ndarray:
    """Pairwise emotion-shift matrix: ``S[i, j] = 0`` iff labels i and j agree.

    All ordered pairs are included, so the matrix is symmetric with a zero
    diagonal.
    """
    if len(labels) == 0:
        raise ValueError("shift labels need at least one utterance")
    index: dict[Hashable, int] = {}
    codes = np.array([index.setdefault(label, len(index)) for label in labels])
    return (codes[:, None] != codes[None, :]).astype(np.int64)
