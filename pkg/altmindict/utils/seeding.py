"""
Seed splitting for reproducible random streams.

Every random stream is a numpy PCG64 generator seeded by a SeedSequence whose
entropy is the root seed followed by integer keys. Splitting rule:

    stream(root, k1, k2, ...) = Generator(PCG64(SeedSequence([root, k1, k2, ...])))

Keys are non-negative integers; real-valued keys (n/r grid points) are
encoded as round(value * 1000). Streams are independent of thread
scheduling and identical across platforms.
"""

from typing import Union
import numpy as np

# Stream tags so one config seed drives independent generators
DICTIONARY_STREAM = 0
COEFFICIENT_STREAM = 1
PERTURB_STREAM = 2
START_VECTOR_STREAM = 3
SUPPORT_SAMPLE_STREAM = 4

GRID_SCALE = 1000


def encode_key(value: Union[int, float]) -> int:
    """Encode an integer or grid value as a non-negative SeedSequence key."""
    if isinstance(value, (int, np.integer)):
        key = int(value)
    else:
        key = int(round(float(value) * GRID_SCALE))
    if key < 0:
        raise ValueError(f"seed keys must be non-negative, got {value}")
    return key


def make_rng(seed: int, *keys: Union[int, float]) -> np.random.Generator:
    """Build the generator for (seed, *keys) following the splitting rule above."""
    entropy = [encode_key(seed)] + [encode_key(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *keys: Union[int, float]) -> int:
    """Derive a child 64-bit seed, e.g. per (r, n/r, trial) sweep cell."""
    entropy = [encode_key(seed)] + [encode_key(k) for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])
