"""Seeded random sources.

Training loops consume uniforms from a :class:`UniformStream`. The stream
hands out the generator's doubles strictly in order regardless of how the
buffer is refilled, so two loops that consume uniforms with the same protocol
see identical randomness. That property is what makes the A3C and GOGAR-A3C
equivalence replays against plain actor-critic bit-exact.
"""

import numpy as np

SEED_SCHEME = "numpy.SeedSequence(master, spawn_key=keys) -> PCG64"


def make_generator(seed, *keys):
    """Return a PCG64 generator for ``seed`` split by the integer ``keys``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=keys)))


def derive_seed(seed, *keys):
    """Fan a master seed out to a child seed (a plain 63-bit integer)."""
    state = np.random.SeedSequence(seed, spawn_key=keys).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))


class UniformStream:
    """Buffered stream of U[0, 1) doubles.

    Kernels read ``buffer[pos:]`` directly and report how many values they
    consumed; :meth:`ensure` guarantees enough values are buffered first.
    """

    def __init__(self, seed, *keys, block=4096):
        if isinstance(seed, np.random.Generator):
            self._gen = seed
        else:
            self._gen = make_generator(seed, *keys)
        self._block = block
        self.buffer = np.empty(0)
        self.pos = 0

    def ensure(self, n):
        avail = self.buffer.shape[0] - self.pos
        if avail < n:
            fresh = self._gen.random(max(n - avail, self._block))
            self.buffer = np.concatenate([self.buffer[self.pos:], fresh])
            self.pos = 0
        return self.buffer

    def random(self):
        self.ensure(1)
        u = float(self.buffer[self.pos])
        self.pos += 1
        return u

    def integers(self, n):
        """Uniform integer in ``[0, n)`` from a single uniform."""
        return min(int(self.random() * n), n - 1)
