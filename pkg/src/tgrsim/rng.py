"""Keyed random streams.

A stream is addressed by ``(drop, cell, ue, purpose)`` under a master seed.
Each key maps to its own ``SeedSequence`` spawn key, so streams are
independent of each other and of creation order: adding a new consumer never
shifts the numbers an existing one sees.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

# spawn keys must be non-negative; -1 is used for "not applicable"
_OFFSET = 1


def _purpose_code(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


@dataclass(frozen=True)
class StreamId:
    drop: int
    cell: int = -1
    ue: int = -1
    purpose: str = ""

    def spawn_key(self) -> tuple[int, ...]:
        return (self.drop + _OFFSET, self.cell + _OFFSET, self.ue + _OFFSET,
                _purpose_code(self.purpose))


class RngStream:
    """A numpy ``Generator`` bound to a stream id."""

    def __init__(self, master_seed: int, stream_id: StreamId):
        self.stream_id = stream_id
        seq = np.random.SeedSequence(entropy=master_seed & (2**64 - 1),
                                     spawn_key=stream_id.spawn_key())
        self.gen = np.random.Generator(np.random.PCG64(seq))

    # thin scalar helpers; these dominate the per-TB hot path
    def random(self) -> float:
        return float(self.gen.random())

    def integers(self, low: int, high: int) -> int:
        return int(self.gen.integers(low, high))

    def normal(self, size=None):
        return self.gen.standard_normal(size)


class RngFactory:
    def __init__(self, master_seed: int, drop: int):
        self.master_seed = master_seed
        self.drop = drop

    def stream(self, purpose: str, cell: int = -1, ue: int = -1) -> RngStream:
        return RngStream(self.master_seed, StreamId(self.drop, cell, ue, purpose))
