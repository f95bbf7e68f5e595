"""
Reproducible random streams derived from a single run seed.
"""

import hashlib

import numpy as np


def _component_key(component):
    return int.from_bytes(hashlib.sha256(component.encode('utf-8')).digest()[:8], 'little')


class RandomStreams:
    """
    Hands out one independent ``numpy.random.Generator`` per named component.

    The same seed and component name always give the same stream, no matter in
    which order components ask for theirs.
    """

    def __init__(self, seed):
        self.seed = int(seed)

    def stream(self, component, *index):
        key = (_component_key(component),) + tuple(int(i) for i in index)
        sequence = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(sequence))

    def __repr__(self):
        return f"RandomStreams(seed={self.seed})"
