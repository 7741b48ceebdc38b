"""Counter-based random bits.

Every draw is a pure function of ``(seed, stream, index, attempt, block)``:
a keyed BLAKE2b digest of the counter tuple.  Sample ``i`` of stream ``s``
therefore never depends on how the index range was split between workers,
and asking for more bits of the same draw only appends bits (prefix-stable),
which is what lets an orbit be recomputed at higher precision from the same
underlying real number.
"""

import hashlib
import struct

MASK64 = (1 << 64) - 1
_BLOCK_BITS = 512


def _key(seed):
    return (seed & MASK64).to_bytes(8, "little")


def random_bits(seed, stream, index, nbits, attempt=0, lane=0):
    """Return the first ``nbits`` bits of the draw as a nonnegative integer."""
    if nbits <= 0:
        return 0
    key = _key(seed)
    nblocks = -(-nbits // _BLOCK_BITS)
    acc = 0
    for block in range(nblocks):
        msg = struct.pack("<QQQQQ", stream & MASK64, index & MASK64,
                          attempt & MASK64, lane & MASK64, block)
        digest = hashlib.blake2b(msg, key=key, digest_size=64).digest()
        acc = (acc << _BLOCK_BITS) | int.from_bytes(digest, "big")
    return acc >> (nblocks * _BLOCK_BITS - nbits)


def uniform_int(seed, stream, index, nbits, attempt=0, lane=0):
    """Integer ``U`` such that the underlying uniform real lies in [U, U+1] / 2**nbits."""
    return random_bits(seed, stream, index, nbits, attempt, lane)


def uniform_float(seed, stream, index, attempt=0, lane=0):
    """A double in [0, 1) built from the first 53 bits of the draw."""
    return random_bits(seed, stream, index, 53, attempt, lane) / 9007199254740992.0
