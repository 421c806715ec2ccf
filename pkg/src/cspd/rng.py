"""Counter-based deterministic random streams.

Each (seed, run, slot, iteration) tuple addresses a disjoint 2^128-draw block
of a Philox counter space, so the "two independent oracle queries per
iteration" requirement is structural rather than a matter of call order, and
any prefix of a run is bitwise reproducible from the master seed alone.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


class StreamSource:
    """Hands out per-(slot, iteration) substreams for one run.

    Generators are recycled between calls by resetting the Philox counter,
    which is bitwise identical to constructing a fresh generator with
    counter = [0, 0, slot, t] but roughly 4x cheaper in the solver hot loop.
    """

    def __init__(self, seed: int, run: int = 0):
        self.seed = int(seed) & _MASK64
        self.run = int(run) & _MASK64
        self._slots: dict[int, tuple[np.random.Philox, np.random.Generator]] = {}

    def stream(self, slot: int, t: int) -> np.random.Generator:
        """Generator positioned at the start of block (slot, t)."""
        pair = self._slots.get(slot)
        if pair is None:
            bitgen = np.random.Philox(key=[self.seed, self.run])
            pair = (bitgen, np.random.Generator(bitgen))
            self._slots[slot] = pair
        bitgen, gen = pair
        state = bitgen.state
        counter = state["state"]["counter"]
        counter[0] = 0
        counter[1] = 0
        counter[2] = int(slot) & _MASK64
        counter[3] = int(t) & _MASK64
        state["buffer_pos"] = 4  # discard any buffered words
        state["has_uint32"] = 0
        bitgen.state = state
        return gen


def substream(seed: int, run: int, slot: int, t: int) -> np.random.Generator:
    """One-shot equivalent of StreamSource(seed, run).stream(slot, t)."""
    return StreamSource(seed, run).stream(slot, t)
