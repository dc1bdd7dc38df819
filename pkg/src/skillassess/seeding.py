"""Deterministic fan-out of one master seed into named substreams.

Every randomized component draws from ``rng_for(master_seed, *labels)``
where the labels name the component and, where applicable, the work item
(learner id, fold index, sweep cell).  The derivation hashes each label so
that e.g. learner "12" and fold 12 do not collide.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_entropy(label) -> int:
    digest = hashlib.sha256(repr(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def seed_sequence(master_seed: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        [int(master_seed) & 0xFFFFFFFFFFFFFFFF, *(_label_entropy(l) for l in labels)]
    )


def rng_for(master_seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master_seed, *labels))


def child_seed(master_seed: int, *labels) -> int:
    """A plain 64-bit seed derived from the master seed and labels."""
    return int(seed_sequence(master_seed, *labels).generate_state(1, np.uint64)[0])
