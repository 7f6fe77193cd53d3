"""Keyed random streams for reproducible, schedule-independent Monte Carlo.

Every stochastic object in the package (a disorder sample, a single path, a
noise realization) owns a counter-based generator derived from the master
seed plus a small integer key.  Streams for distinct keys are statistically
independent and do not depend on how work is split across processes, which
is what makes output files byte-identical for any worker count.
"""

import numpy as np

### domain tags keep streams for different purposes disjoint even when the
### same master seed and task indices are reused
DOMAIN_LANDSCAPE = 11
DOMAIN_WALK_PATH = 12
DOMAIN_SPEED_MEASURE = 13
DOMAIN_DIFFUSION_PATH = 14
DOMAIN_FLIP_PATH = 15
DOMAIN_COUPLING = 16
DOMAIN_NOISE = 17
DOMAIN_SUBSEED = 18


def stream(*key):
    """Return a fresh Generator for an integer key tuple.

    The first component is normally the user-facing master seed, the second a
    DOMAIN_* tag, and the rest task indices (disorder index, path index, ...).
    """
    for part in key:
        if int(part) != part:
            raise TypeError(f"stream key parts must be integers, got {part!r}")
    ss = np.random.SeedSequence([int(part) for part in key])
    return np.random.Generator(np.random.Philox(seed=ss))


def subseed(*key):
    """Derive a 63-bit integer seed from a key tuple.

    Used where an API takes a plain integer seed (e.g. per-disorder landscape
    seeds inside an ensemble run).
    """
    ss = np.random.SeedSequence([int(part) for part in key] + [DOMAIN_SUBSEED])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


class UniformSource:
    """Buffered stream of uniforms on [0, 1) drawn from a Generator.

    The simulation kernels (compiled and pure python alike) consume their
    randomness exclusively through this buffer, one value at a time in stream
    order, so the two backends see identical numbers and produce bit-identical
    paths.  Buffer size only affects how far ahead values are drawn; it never
    changes which value the k-th consumption sees.

    The buffer starts small and grows on refill so that short paths do not
    pay for a large up-front block.
    """

    __slots__ = ("gen", "buf", "pos", "_block", "_max_block")

    def __init__(self, gen, block=2048, max_block=65536):
        if block < 1 or max_block < block:
            raise ValueError("need 1 <= block <= max_block")
        self.gen = gen
        self._block = block
        self._max_block = max_block
        self.buf = gen.random(block)
        self.pos = 0

    def refill(self):
        self._block = min(4 * self._block, self._max_block)
        self.buf = self.gen.random(self._block)
        self.pos = 0

    def next(self):
        if self.pos >= self.buf.shape[0]:
            self.refill()
        v = self.buf[self.pos]
        self.pos += 1
        return v
