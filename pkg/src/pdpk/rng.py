"""Seeded random streams.

A single root seed fans out into named substreams so that adding a new
consumer never shifts the numbers drawn by an existing one.
"""

import hashlib

import numpy as np

STREAMS = ("space", "processes", "lp_split", "downstream_split", "embeddings", "conditions")


def substream_seed(root_seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{int(root_seed)}/{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(root_seed: int, name: str) -> np.random.Generator:
    """Return an independent PCG64 generator for stream ``name``."""
    return np.random.Generator(np.random.PCG64(substream_seed(root_seed, name)))
