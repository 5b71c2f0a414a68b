"""Keyed random-number streams.

Every random draw in the package comes from a counter-based Philox generator
keyed by ``(seed, stream tag, indices...)``, so a given quantity (prior member
j, observation noise, perturbation at iteration n for member j) is identical
no matter in which order, or from which thread, it is produced.
"""

import numpy as np

PRIOR_STREAM = 1
OBS_STREAM = 2
PERTURB_STREAM = 3


def stream(seed, *key):
    """Return a Generator for the (seed, *key) stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
