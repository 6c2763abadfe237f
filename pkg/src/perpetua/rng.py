"""Seeded random streams.

A stream is identified by ``(seed, stream_id)``. Its state transition is the
Philox4x64-10 counter-based generator from numpy with the 128-bit key
``seed + 2**64 * stream_id`` and counter starting at zero; numpy's
``Generator`` maps the raw 64-bit words to uniforms (53-bit) and normals
(ziggurat). Both stages are platform-independent, so a given pair always
replays the same draws. Replication ``r`` of an ensemble uses stream ``r``.
"""

from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass
class RngStream:
    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        key = (int(self.seed) & _MASK64) | ((int(self.stream_id) & _MASK64) << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)
