"""Seeded, splittable random streams.

Every piece of randomness in the package is drawn from a counter-based
generator keyed by ``(seed, stream_id)``.  Streams with distinct ids are
statistically independent, and a stream's output never depends on how many
other streams exist or in which order they are consumed.  That is what makes
column-level regeneration, prefix stability (shrinking ``n`` keeps the
surviving columns), and parallel scheduling all bit-reproducible.

Stream ids pack three fields into a ``uint64``::

    id = replica << 33 | space << 32 | index

where ``space`` 0 is the per-column space and 1 the warm-up space used by
m-dependent models for innovations that precede column 0.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameter

_MAX_SEED = 2**63
_MAX_REPLICA = 2**31
_MAX_INDEX = 2**32

_COLUMN_SPACE = 0
_WARMUP_SPACE = 1


def stream(seed: int, stream_id: int) -> np.random.Generator:
    """Generator keyed by (seed, stream_id); same key, same output."""
    if not 0 <= seed < _MAX_SEED:
        raise InvalidParameter(f"seed must be in [0, 2**63), got {seed}")
    if not 0 <= stream_id < 2**64:
        raise InvalidParameter(f"stream_id must be in [0, 2**64), got {stream_id}")
    key = np.array([seed, stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _packed(replica: int, space: int, index: int) -> int:
    if not 0 <= replica < _MAX_REPLICA:
        raise InvalidParameter(f"replica must be in [0, 2**31), got {replica}")
    if not 0 <= index < _MAX_INDEX:
        raise InvalidParameter(f"stream index must be in [0, 2**32), got {index}")
    return replica << 33 | space << 32 | index


def column_stream(seed: int, replica: int, index: int) -> np.random.Generator:
    """Stream feeding column ``index`` of the given replica."""
    return stream(seed, _packed(replica, _COLUMN_SPACE, index))


def warmup_stream(seed: int, replica: int, index: int) -> np.random.Generator:
    """Stream feeding pre-sample innovation ``index`` (m-dependent models)."""
    return stream(seed, _packed(replica, _WARMUP_SPACE, index))


def aux_stream(seed: int, *path: int) -> np.random.Generator:
    """Auxiliary stream for randomness outside the column layout.

    Test matrices, Monte Carlo batteries, and diagnostic redraws draw from
    here.  The key is derived by hashing (seed, path) through a seed
    sequence rather than by packing bits, so these streams live in a
    different region of key space than the column and warm-up streams.
    """
    if not 0 <= seed < _MAX_SEED:
        raise InvalidParameter(f"seed must be in [0, 2**63), got {seed}")
    if any(not 0 <= part < 2**32 for part in path):
        raise InvalidParameter(f"aux stream path parts must be uint32, got {path}")
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(seed=seq))
