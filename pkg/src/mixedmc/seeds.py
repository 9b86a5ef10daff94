"""Deterministic RNG streams derived from one unsigned base seed.

Every random quantity in the benchmark and CLI flows from a single u64 seed
through ``stream(base_seed, *tags)``.  Tags are small non-negative integers
identifying the consumer; the canonical layout for a benchmark replication is

    (base_seed, setting_id, replication, role)

with the role codes below.  Distinct tag tuples give independent streams and
no stream is ever reused across roles.
"""

from __future__ import annotations

import numpy as np

ROLE_TRUTH = 1        # latent factor draw
ROLE_OBSERVATION = 2  # mask + response noise (split into child streams)
ROLE_HOLDOUT = 3      # train/test entry split
ROLE_SPLIT_BASE = 100 # + procedure id: row splits for split-based refinements


def stream(*tags) -> np.random.Generator:
    """Generator keyed by an integer tag tuple."""
    clean = []
    for t in tags:
        t = int(t)
        if t < 0:
            raise ValueError(f"seed tags must be non-negative, got {t}")
        clean.append(t)
    return np.random.default_rng(np.random.SeedSequence(clean))
