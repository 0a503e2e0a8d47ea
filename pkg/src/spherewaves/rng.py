"""Counter-based, splittable random streams.

Every replication draws from its own Philox stream whose key is a hash of
(master seed, experiment id, replication index).  No state is shared
between replications, so results do not depend on scheduling.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def stream_id(master_seed: int, experiment_id: str, replication: int) -> int:
    """64-bit stream identifier for one replication."""
    payload = f"{int(master_seed)}|{experiment_id}|{int(replication)}".encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int

    @classmethod
    def for_replication(cls, master_seed: int, experiment_id: str, replication: int) -> "RngStream":
        return cls(int(master_seed), stream_id(master_seed, experiment_id, replication))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence([self.master_seed & (2**64 - 1), self.stream_id])
        return np.random.Generator(np.random.Philox(seq))
