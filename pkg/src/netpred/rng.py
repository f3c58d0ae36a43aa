"""Seeded random streams.

Every stream is a ``numpy.random.Generator`` over the counter-based Philox
4x64-10 bit generator, keyed by ``SeedSequence([seed, *stream])``. Child
streams (one per node, fold or chain) are addressed by extra integers so
results never depend on evaluation order.
"""

import numpy as np

GENERATOR_NAME = "numpy.Philox4x64-10/SeedSequence"


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))
