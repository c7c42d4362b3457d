"""Named, counter-based random substreams.

All randomness in a run flows from one root seed. A stream is addressed by a
name plus integer keys (sample index, epoch, ...), so any stage can be re-run
on its own and parallel workers never share generator state.
"""
import numpy as np

STREAMS = {
    'generate': 0,
    'shuffle': 1,
    'init': 2,
    'dropout': 3,
    'split': 4,
}


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, name, *keys)``"""
    if name not in STREAMS:
        raise ValueError(f"Unknown random stream: {name}")
    entropy = [int(seed), STREAMS[name], *(int(k) for k in keys)]
    return np.random.default_rng(np.random.SeedSequence(entropy))
