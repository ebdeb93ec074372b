"""
Reproducible random streams.

Every stream is a numpy Generator over the counter-based Philox4x64-10 bit
generator. The 128-bit key packs a 64-bit stream id above the 64-bit seed:

    key = (stream_id << 64) | (seed mod 2**64)

stream_id is the 8-byte BLAKE2b digest (digest_size=8, little endian) of the labels
joined by '/', e.g. stream(42, 'noise', 7) hashes b'noise/7'. With no labels
the stream id is 0. numpy increments the 256-bit counter before each block,
so the first four raw words are Philox4x64-10(counter=1, key); the block
function matches the Random123 known-answer vectors.

Derived draws follow numpy's Generator transforms: random() and uniform()
use (word >> 11) * 2**-53, standard_normal() and normal() use numpy's
256-layer ziggurat over the raw words. Another implementation reproduces the
raw words and uniforms from the key rule alone; normals also need the
ziggurat tables. Splatfield/tests.py pins vectors for stream(42, 'noise', 0).
"""
import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_id(*labels):
    if not labels:
        return 0
    text = '/'.join(str(label) for label in labels).encode('utf-8')
    digest = hashlib.blake2b(text, digest_size=8).digest()
    return int.from_bytes(digest, 'little')


def stream(seed, *labels):
    """Generator keyed by (seed, labels); independent of call order."""
    key = (stream_id(*labels) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed, *labels):
    """A 63-bit child seed, for handing a sub-seed to another component."""
    return int(stream(seed, 'derive', *labels).integers(0, 2**63 - 1))
