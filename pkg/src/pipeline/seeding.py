"""
Per-seed random streams.

Every stream of a seed is an independent generator keyed by (seed, stream id),
so scene generation, split selection and evaluation featurisation never share
state, and a split drawn for K shots does not depend on which other K were
requested in the same run.
"""

import numpy as np

STREAMS = {
    "scenes": 0,
    "split": 1,
    "eval": 2,
}


def stream_rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng([seed, STREAMS[stream]])
