"""Deterministic random-stream construction.

All stochastic code in the package draws from counter-based Philox
generators keyed by (seed, stream, index).  Streams separate unrelated
consumers (ensemble sampling, photon pipeline, tomography shots, ...)
so adding draws in one place never perturbs another.  The index slot is
used for fixed-size work chunks: chunk boundaries are a property of the
trial count alone, never of the worker count, which is what makes
multi-worker runs byte-identical to single-worker runs.
"""

import numpy as np

from .errors import DomainError

# Stream identifiers.  Values are arbitrary but frozen: changing them
# changes every simulated data set.
STREAM_ENSEMBLE = 1
STREAM_PIPELINE = 2
STREAM_TOMOGRAPHY = 3
STREAM_COUNTS = 4
STREAM_BOOTSTRAP = 5
STREAM_FATES = 6
STREAM_NOISE = 7
STREAM_SCENARIO = 8

_MAX_SEED = 2**63 - 1
_MAX_INDEX = 2**32 - 1


def stream(seed: int, stream_id: int, index: int = 0) -> np.random.Generator:
    """Return the Philox generator for (seed, stream_id, index).

    The same triple always yields the same draw sequence, independent of
    any other stream that may have been consumed before.
    """
    if not 0 <= int(seed) <= _MAX_SEED:
        raise DomainError(f"seed must be in [0, 2**63), got {seed}")
    if not 0 <= int(index) <= _MAX_INDEX:
        raise DomainError(f"stream index must fit in 32 bits, got {index}")
    key = np.array(
        [np.uint64(seed), (np.uint64(stream_id) << np.uint64(32)) | np.uint64(index)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))
