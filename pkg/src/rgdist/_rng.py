"""Seeding helpers.

All randomness in the package derives from a single integer seed.  Streams for
independent units of work (a graph size, a replicate, a pair) are keyed
sub-streams of that seed, so results never depend on scheduling or on how many
workers were used.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed, *keys):
    """Return a ``numpy.random.Generator`` for the sub-stream ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)


def _splitmix64(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def pair_uniform(seed, i, j):
    """Counter-based uniforms in [0, 1) keyed on ``(seed, i, j)``.

    ``i`` and ``j`` may be arrays; the key is unordered, so ``(i, j)`` and
    ``(j, i)`` give the same value.
    """
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    with np.errstate(over="ignore"):
        k = _splitmix64(np.uint64(int(seed) & _MASK64) ^ np.uint64(0xD1B54A32D192ED03))
        k = _splitmix64(k ^ lo)
        k = _splitmix64(k ^ (hi * np.uint64(0x9E3779B97F4A7C15)))
    return (k >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
