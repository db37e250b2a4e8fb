import contextlib
import contextvars
from typing import Iterator, Optional

import numpy as np
import torch


def derive_seed(seed: int, *streams: int) -> int:
    """Derive an independent 63-bit seed from a base seed and stream indices."""
    words = np.random.SeedSequence([seed, *streams]).generate_state(2, dtype=np.uint32)
    return (int(words[0]) << 31) ^ int(words[1])


class RngState:
    """Seeded random stream used for dropout masks and pair sampling.

    Identical seeds driven through identical op sequences produce identical
    draws. ``position`` counts the number of scalars drawn so far.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self.position = 0
        self.generator = torch.Generator().manual_seed(seed)

    def __repr__(self) -> str:
        return f"RngState(seed={self.seed}, position={self.position})"

    def uniform(self, shape: torch.Size | tuple[int, ...], dtype: torch.dtype) -> torch.Tensor:
        draws = torch.rand(shape, generator=self.generator, dtype=dtype)
        self.position += draws.numel()
        return draws

    def permutation(self, n: int) -> torch.Tensor:
        perm = torch.randperm(n, generator=self.generator)
        self.position += n
        return perm

    def spawn(self, stream: int) -> "RngState":
        return RngState(derive_seed(self.seed, stream))


_current_rng = contextvars.ContextVar[Optional[RngState]]("current_rng", default=None)


def current_rng() -> Optional[RngState]:
    return _current_rng.get()


@contextlib.contextmanager
def use_rng(rng: Optional[RngState]) -> Iterator[Optional[RngState]]:
    """Make ``rng`` the stream consumed by every dropout inside the block."""
    token = _current_rng.set(rng)
    try:
        yield rng
    finally:
        _current_rng.reset(token)
