"""Deterministic named substreams derived from one top-level seed.

Every stochastic entry point in the package takes a single integer seed and
derives independent generators for its internal purposes ("events", "reinit",
path chunk 17, ...) through `substream`. Two calls with the same (seed, key)
give identical streams; different keys give statistically independent ones.
This is what makes Monte Carlo aggregation order-independent: each chunk of
paths owns a substream keyed by its chunk index, so results do not depend on
scheduling or chunk execution order.
"""

import hashlib

import numpy as np


def _key_part(k):
    """Map one key component (int or string-like) to a stable integer."""
    if isinstance(k, (int, np.integer)):
        return int(k)
    digest = hashlib.sha256(str(k).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seed_sequence(seed, *key):
    """SeedSequence for the substream of `seed` named by `key`."""
    entropy = [int(seed)] + [_key_part(k) for k in key]
    return np.random.SeedSequence(entropy)


def substream(seed, *key):
    """A numpy Generator on the substream of `seed` named by `key`.

    >>> substream(1, "events").standard_normal() == substream(1, "events").standard_normal()
    True
    """
    return np.random.default_rng(seed_sequence(seed, *key))


def child_seed(seed, *key):
    """A derived integer seed, for handing to APIs that take seeds not rngs."""
    return int(seed_sequence(seed, *key).generate_state(1, np.uint64)[0])
