"""Per-replication random streams.

Every replication owns a generator seeded from (master_seed, law_id, n, r) by
numpy's SeedSequence hash, so results depend only on those four numbers and
never on which worker ran the replication or in what order.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

MASK64 = (1 << 64) - 1


def law_id(spec) -> int:
    """Stable 64-bit identifier of a law from its canonical JSON form."""
    text = json.dumps(spec, sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def stream(master_seed: int, *keys: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed) & MASK64,
                                 spawn_key=tuple(int(k) & MASK64 for k in keys))
    return np.random.Generator(np.random.PCG64(seq))


def replication_rng(master_seed: int, lid: int, n: int, r: int) -> np.random.Generator:
    return stream(master_seed, lid, n, r)
