"""Counter-based random streams keyed by ``(seed, stream tag)``.

Draw ``i`` of a stream depends only on ``(seed, tag, i)``, so any block of
draws can be produced independently by any worker.  Backed by numpy's
Philox4x64 (a counter-based generator); each counter step yields 4 words.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox

RNG_ID = "philox4x64-v1"

# stream tags
LEAVES = 0x6C656166
MONTE_CARLO = 0x6D6F6E74
SLICE = 0x736C6963
_RESAMPLE = 1 << 48

_U64 = 1 << 64
_MASK64 = _U64 - 1


def _key(seed: int, tag: int) -> int:
    if not 0 <= seed < _U64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed | (tag << 64)


def raw_words(seed: int, tag: int, start: int, count: int) -> np.ndarray:
    """Draws ``start .. start+count-1`` of the stream as uint64."""
    if count <= 0:
        return np.empty(0, dtype=np.uint64)
    bg = Philox(key=_key(seed, tag))
    offset = start % 4
    if start - offset:
        bg.advance((start - offset) // 4)
    return bg.random_raw(count + offset)[offset:].astype(np.uint64, copy=False)


def uniform_ints(seed: int, tag: int, start: int, count: int, bound: int) -> np.ndarray:
    """Exactly uniform integers in ``[0, bound)`` for draws ``start ..``, as uint64.

    Rejected words (probability below ``bound / 2^64``) are redrawn from a
    secondary stream at the same index, so results never depend on block layout.
    """
    if not 1 <= bound <= _U64:
        raise ValueError("bound out of range")
    words = raw_words(seed, tag, start, count)
    if bound & (bound - 1) == 0:
        return words & np.uint64(bound - 1)
    limit = _U64 - (_U64 % bound)
    out = words % np.uint64(bound)
    bad = np.nonzero(words >= np.uint64(limit))[0]
    for j in bad:
        idx, attempt = start + int(j), 1
        while True:
            w = int(raw_words(seed, tag ^ (_RESAMPLE * attempt), idx, 1)[0])
            if w < limit:
                out[j] = w % bound
                break
            attempt += 1
    return out
