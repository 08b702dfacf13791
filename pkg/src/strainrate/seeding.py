"""Deterministic sub-seed derivation.

A single root seed drives the whole pipeline.  Every randomized unit of work
(an impact, an element, an evaluation round) gets its own generator derived by
hashing the root seed together with the unit's identifiers, so results do not
depend on evaluation order or worker count.

The derivation is part of the reproducibility contract: sub-seed =
SHA-256 over ``"<root>|<part>|<part>..."`` (decimal/string parts joined with
``|``), truncated to 128 bits, fed to ``numpy.random.SeedSequence``.
"""

import hashlib

import numpy as np


def derive_seed(root: int, *parts) -> int:
    """128-bit child seed from a root seed and a path of identifiers."""
    key = "|".join([str(int(root))] + [str(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")


def derive_rng(root: int, *parts) -> np.random.Generator:
    """Generator seeded from ``derive_seed(root, *parts)``."""
    return np.random.default_rng(np.random.SeedSequence(derive_seed(root, *parts)))
