"""Deterministic random-stream derivation.

Every random quantity in the package is drawn from a stream derived from a
64-bit master seed plus an integer path, via ``numpy.random.SeedSequence``.
Streams are therefore independent of evaluation order: bootstrap draw ``i``,
or Monte Carlo replication ``r`` of cell ``c``, always sees the same
generator no matter how work is scheduled across processes.

Path components reserved by convention:

* bootstrap draws:        (seed, DOMAIN_BOOTSTRAP, draw_index)
* Monte Carlo data:       (seed, DOMAIN_MECH, *cell_digest, rep_index, 0)
* Monte Carlo test seeds: derived with trailing component 1
"""

from __future__ import annotations

import hashlib

import numpy as np

DOMAIN_BOOTSTRAP = 0xB007
DOMAIN_MC = 0x3C37


def child_seed(master: int, *path: int) -> np.random.SeedSequence:
    """Seed sequence for the stream identified by ``(master, *path)``."""
    return np.random.SeedSequence(entropy=(int(master) & (2**64 - 1), *[int(p) for p in path]))


def stream(master: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by ``(master, *path)``."""
    return np.random.default_rng(child_seed(master, *path))


def digest_words(text: str) -> tuple[int, ...]:
    """Stable 4-word digest of an identity string, for use in seed paths.

    Uses SHA-256 so the mapping is independent of the process hash seed and
    of the order in which identities are encountered.
    """
    h = hashlib.sha256(text.encode("utf-8")).digest()
    return tuple(int.from_bytes(h[8 * i : 8 * (i + 1)], "little") for i in range(4))
