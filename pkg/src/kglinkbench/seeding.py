"""Seed derivation.

Every random stream in the toolkit is derived from one top-level seed as
``derive_seed(seed, tag, *indices)``: the seed, a CRC32 of the purpose tag
and any integer indices (relation id, fraction key) are fed to
``numpy.random.SeedSequence`` and the first 64-bit word of its state is the
derived seed. Streams are therefore independent of scheduling order.
"""
import zlib

import numpy as np


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {seed!r}")
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a non-negative 64-bit integer, got {seed}")
    return int(seed)


def derive_seed(seed, tag, *indices):
    seed = _check_seed(seed)
    entropy = [seed, zlib.crc32(tag.encode("utf-8"))] + [int(i) for i in indices]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])


def rng_for(seed, tag=None, *indices):
    if tag is None:
        return np.random.default_rng(_check_seed(seed))
    return np.random.default_rng(derive_seed(seed, tag, *indices))


def fraction_key(fraction):
    """Integer key for a training fraction, stable under float noise."""
    return int(round(float(fraction) * 1_000_000))
