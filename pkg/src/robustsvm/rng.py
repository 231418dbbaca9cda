"""Counter-based deterministic random streams.

Every random draw in the package comes from a Philox 4x32 bit stream keyed
by (master_seed, purpose, index). Philox is counter based, so a stream is
fully determined by its key: regenerating feature blocks at predict time
only needs the seeds, never the sampled values. Values are derived from the
raw 64-bit outputs only (never from numpy Generator method streams, which
carry no cross-version guarantee):

  uniform  u = ((raw >> 11) + 0.5) * 2**-53          strictly inside (0, 1)
  normal   Box-Muller on consecutive uniform pairs (u1, u2):
           z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2)

Draw order is part of the format: callers consume one stream per key, front
to back, and the consumers below document their layouts. GENERATOR_ID names
this scheme and is recorded in model files so an incompatible reader fails
loudly instead of silently regenerating different features.
"""

from __future__ import annotations

import threading

import numpy as np
from numpy.random import Philox, SeedSequence

GENERATOR_ID = "philox4x32-boxmuller/v1"

# Stream purposes. New purposes must get new codes; reusing one would
# correlate streams that the algorithm assumes independent.
PURPOSE_FEATURES = 1
PURPOSE_BATCH = 2
PURPOSE_SHUFFLE = 3
PURPOSE_ZOO = 4
PURPOSE_TRIAL = 5
PURPOSE_DATA = 6

_U64 = np.uint64
_TWO_M53 = 2.0 ** -53


def _key(master_seed: int, purpose: int, index: int) -> np.ndarray:
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(purpose), int(index) & 0xFFFFFFFFFFFFFFFF]
    return SeedSequence(entropy=entropy).generate_state(2, _U64)


_local = threading.local()


def raw_stream(master_seed: int, purpose: int, index: int, n: int) -> np.ndarray:
    """Return the first n raw 64-bit words of the (seed, purpose, index) stream."""
    # Re-keying a per-thread Philox skips the entropy-gathering cost of a
    # fresh construction; the stream is identical to Philox(key=...).
    bitgen = getattr(_local, "philox", None)
    if bitgen is None:
        bitgen = _local.philox = Philox(key=0)
    state = bitgen.state
    state["state"]["counter"][:] = 0
    state["state"]["key"][:] = _key(master_seed, purpose, index)
    state["buffer_pos"] = 4
    bitgen.state = state
    return bitgen.random_raw(n)


def uniforms(master_seed: int, purpose: int, index: int, n: int) -> np.ndarray:
    """n doubles strictly inside (0, 1)."""
    raw = raw_stream(master_seed, purpose, index, n)
    return ((raw >> _U64(11)).astype(np.float64) + 0.5) * _TWO_M53


def normals(master_seed: int, purpose: int, index: int, n: int) -> np.ndarray:
    """n standard normals via Box-Muller; consumes 2*ceil(n/2) uniforms."""
    pairs = (n + 1) // 2
    u = uniforms(master_seed, purpose, index, 2 * pairs)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:n]


def integers_below(master_seed: int, purpose: int, index: int, n: int, high: int) -> np.ndarray:
    """n integers uniform on [0, high)."""
    if high <= 0:
        raise ValueError("high must be positive")
    u = uniforms(master_seed, purpose, index, n)
    return np.minimum((u * high).astype(np.int64), high - 1)


def permutation(master_seed: int, purpose: int, index: int, n: int) -> np.ndarray:
    """A uniform permutation of range(n): argsort of n uniform keys."""
    return np.argsort(uniforms(master_seed, purpose, index, n), kind="stable")
