"""Reproducible, independent random streams.

Every stream is a Philox (counter-based) generator keyed by a
``SeedSequence(seed, spawn_key=(stream_id, *sub))``.  Distinct spawn keys give
independent key material, so substreams never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream", "shard_sizes"]

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair naming one reproducible random stream.

    ``sub`` extends the key for derived substreams (e.g. the mixing variable and
    the fBm driver of one path draw from ``substream(0)`` and ``substream(1)``).
    """

    seed: int
    stream_id: int = 0
    sub: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")
        if any(s < 0 for s in self.sub):
            raise ValueError("substream indices must be nonnegative")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed & _SEED_MASK, spawn_key=(self.stream_id, *self.sub))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, i: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, (*self.sub, i))


def shard_sizes(total: int, shards: int) -> list[int]:
    """Split ``total`` draws over ``shards`` streams, earlier shards taking the remainder."""
    if shards < 1:
        raise ValueError("need at least one shard")
    base, extra = divmod(total, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]
