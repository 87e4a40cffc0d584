"""
Counter-based random streams keyed by (master seed, stream ids).

Every replication, and every purpose inside a replication, draws from its own
Philox stream, so results never depend on scheduling order or thread count
and adding replications never perturbs earlier ones.
"""

from __future__ import annotations

import numpy as np

from panel_sphericity.errors import InputError

# Purpose ids used as the last spawn-key component.
DISTURBANCES = 0
REGRESSORS = 1
LOADINGS = 2


def stream_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Build the generator for one stream.

    Args:
        seed: Master seed (any non-negative 64-bit integer)
        stream: Stream identifiers, e.g. (replication index, purpose)

    Returns:
        A Philox-backed numpy Generator
    """
    if seed < 0:
        raise InputError("seed must be non-negative")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))
