"""Reproducible seed derivation for sweeps and replicates."""
from __future__ import annotations

import numpy as np


def derive_seed(base: int, *keys: int) -> int:
    """Independent 63-bit seed for the stream identified by ``(base, *keys)``.

    Run ``r`` of graph ``g`` under base seed ``b`` uses ``derive_seed(b, g, r)``;
    the mapping is stable across platforms and numpy versions.
    """
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def uint64_seed(rng: np.random.Generator) -> int:
    """Draw a seed for a compiled kernel's private generator."""
    return int(rng.integers(0, 2**63, dtype=np.int64))
