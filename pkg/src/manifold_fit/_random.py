"""Counter-based random streams.

Every variate is a pure function of ``(seed, stream, index, draw)``, hashed
with the SplitMix64 finalizer.  Point ``i`` of any sampler reads only its own
``index`` so results do not depend on how work is split across workers.

Stream ids:

* ``SAMPLE``      -- on-manifold sampling (angles, rejection coins)
* ``NOISE``       -- additive Gaussian noise
* ``INIT_OFFSET`` -- offsets used when generating initial band points
* ``SPLIT``       -- seed derivation for sweep cells and rejection rounds
"""
import numpy as np

SAMPLE = 1
NOISE = 2
INIT_OFFSET = 3
SPLIT = 4

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(x):
    if isinstance(x, (int, np.integer)):
        return np.uint64(int(x) & _MASK64)
    return np.asarray(x).astype(np.uint64)


def random_bits(seed, stream, index, draw):
    """Raw 64-bit hash of the counter tuple (broadcasts over arrays)."""
    with np.errstate(over="ignore"):
        h = _mix(_as_u64(seed) ^ (_as_u64(stream) * _GOLDEN))
        h = _mix(h + _as_u64(index) * _GOLDEN)
        h = _mix(h + (_as_u64(draw) + np.uint64(1)) * _GOLDEN)
    return h


def uniform(seed, stream, index, draw):
    """Uniform variates on the open interval (0, 1)."""
    bits = random_bits(seed, stream, index, draw) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def normal(seed, stream, index, size, offset=0):
    """Standard normals, shape ``index.shape + (size,)``.

    Normal ``j`` of point ``i`` is built by Box-Muller from draws
    ``offset + 2j`` and ``offset + 2j + 1``.
    """
    index = np.asarray(index, dtype=np.uint64)[..., None]
    j = np.arange(size, dtype=np.uint64)
    u1 = uniform(seed, stream, index, np.uint64(offset) + 2 * j)
    u2 = uniform(seed, stream, index, np.uint64(offset) + 2 * j + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def derive_seed(seed, *keys):
    """Split ``seed`` into a child seed labelled by integer ``keys``.

    Distinct key tuples give distinct, statistically independent seeds; the
    mapping is stable across platforms and Python versions.
    """
    h = _as_u64(seed)
    for depth, key in enumerate(keys):
        h = random_bits(h, SPLIT, int(key), depth)
    return int(h)
