"""Seeded random streams.

Every stochastic operation takes an explicit integer seed and draws from a
``numpy.random.Generator`` backed by Philox-4x64, a counter-based generator
whose output is fixed by its algorithm and therefore identical across
platforms. Independent sub-streams are derived by hashing a tuple of integer
keys through ``SeedSequence``, e.g. ``make_rng(run_seed, client_id)`` gives a
client its own stream that no other client's behaviour can perturb.
"""
import numpy as np

# stream tags keep sub-streams of one seed apart
PARTITION = 1
MASK = 2
GAN_TRAIN = 3
GAN_SAMPLE = 4
LOCAL_FIT = 5
SERVER_FIT = 6


def _key(value):
    if isinstance(value, (float, np.floating)):
        # grid values such as p=0.25 become exact integers
        return int(round(float(value) * 1_000_000))
    return int(value)


def _flatten(keys):
    for k in keys:
        if isinstance(k, (tuple, list)):
            yield from _flatten(k)
        else:
            yield _key(k)


def seed_sequence(*keys):
    """Keys may be ints, grid floats, or (nested) tuples of those."""
    return np.random.SeedSequence(list(_flatten(keys)))


def make_rng(*keys):
    """Return a Philox generator keyed by ``keys`` (ints or grid floats)."""
    if not list(_flatten(keys)):
        raise ValueError("at least one seed key is required")
    return np.random.Generator(np.random.Philox(seed_sequence(*keys)))


def derive_seed(*keys):
    """Collapse ``keys`` into a single 63-bit integer seed."""
    return int(seed_sequence(*keys).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
