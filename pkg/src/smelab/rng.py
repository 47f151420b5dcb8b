"""Counter-based random numbers (Philox4x64-10) with named streams.

Every random quantity in this package is a pure function of a key tuple

    (seed, stream, path, step, draw, slot)

so that results are reproducible bit-for-bit regardless of execution order,
chunking, or thread count.  The generator is the standard Philox 4x64 bijection
with 10 rounds; the two 64-bit key words hold (seed, stream) and the four
counter words hold (path, step, draw, block).  Standard normals are produced by
the inverse-CDF transform (scipy.special.ndtri) applied to open-interval
uniforms, never by rejection or Box-Muller, so the draw count per key is fixed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Philox 4x64 round multipliers and Weyl key increments (Random123 constants).
_M0 = 0xD2E7470EE14C6C93
_M1 = 0xCA5A826395121157
_W0 = 0x9E3779B97F4A7C15
_W1 = 0xBB67AE8584CAA73B
_MASK64 = (1 << 64) - 1
_ROUNDS = 10

_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 2.0 ** -53

# Stream tags.  Each independent consumer of randomness gets its own stream so
# that counters never collide across uses of the same seed.
STREAM_GAMMA = 1   # per-iteration gradient noise draws in the discrete algorithms
STREAM_EM = 2      # Brownian increments in the Euler-Maruyama integrator
STREAM_SPD = 3     # Gaussian fill used to build random orthogonal bases
STREAM_MC = 4      # scratch Monte Carlo draws (covariance estimates, oracles)


def _mulhilo(a, b):
    """Full 64x64 -> 128 bit product of uint64 arrays, as (high, low) words."""
    lo = a * b  # wraps mod 2**64, which is exactly the low word
    ahi = a >> _S32
    alo = a & _M32
    bhi = b >> _S32
    blo = b & _M32
    x0 = alo * blo
    x1 = ahi * blo
    x2 = alo * bhi
    mid = (x0 >> _S32) + (x1 & _M32) + (x2 & _M32)
    hi = ahi * bhi + (x1 >> _S32) + (x2 >> _S32) + (mid >> _S32)
    return hi, lo


def philox4x64(counter, key):
    """Apply the Philox4x64-10 bijection.

    counter: sequence of four uint64 arrays (broadcast together); key: pair of
    python ints.  Returns four uint64 arrays of the broadcast shape.  Matches
    the Random123 / numpy reference outputs word for word.
    """
    c = [np.atleast_1d(np.asarray(w, dtype=np.uint64)) for w in counter]
    c0, c1, c2, c3 = np.broadcast_arrays(*c)
    k0 = int(key[0]) & _MASK64
    k1 = int(key[1]) & _MASK64
    m0 = np.uint64(_M0)
    m1 = np.uint64(_M1)
    for r in range(_ROUNDS):
        rk0 = np.uint64((k0 + r * _W0) & _MASK64)
        rk1 = np.uint64((k1 + r * _W1) & _MASK64)
        hi0, lo0 = _mulhilo(m0, c0)
        hi1, lo1 = _mulhilo(m1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ rk0, lo1, hi0 ^ c3 ^ rk1, lo0
    return c0, c1, c2, c3


def raw_words(seed, stream, path, step, draw, n_words):
    """n_words raw uint64 outputs for the given key tuple.

    path and step may be integer arrays (broadcast against each other); the
    result has shape broadcast(path, step).shape + (n_words,).
    """
    if n_words < 1:
        raise ValueError("n_words must be >= 1")
    scalar_key = np.ndim(path) == 0 and np.ndim(step) == 0
    path = np.atleast_1d(np.asarray(path, dtype=np.uint64))
    step = np.atleast_1d(np.asarray(step, dtype=np.uint64))
    base = np.broadcast(path, step)
    n_blocks = -(-n_words // 4)
    blocks = np.arange(n_blocks, dtype=np.uint64)
    c0 = path.reshape(path.shape + (1,))
    c1 = step.reshape(step.shape + (1,))
    c2 = np.uint64(int(draw) & _MASK64)
    out = philox4x64((c0, c1, c2, blocks), (seed, stream))
    words = np.stack(out, axis=-1).reshape(base.shape + (4 * n_blocks,))
    words = words[..., :n_words]
    return words[0] if scalar_key else words


def uniforms(seed, stream, path, step, draw, n):
    """n float64 uniforms on the open interval (0, 1) for the key tuple."""
    w = raw_words(seed, stream, path, step, draw, n)
    return ((w >> _S11).astype(np.float64) + 0.5) * _INV53


def normals(seed, stream, path, step, draw, n):
    """n standard normal deviates for the key tuple (inverse-CDF transform)."""
    return ndtri(uniforms(seed, stream, path, step, draw, n))


class CounterStream:
    """A positioned stream of standard-normal draws for one (seed, stream, path).

    Each call to normals(n) consumes one step of the counter, so interleaving
    callers cannot silently correlate: the k-th call always returns the same
    values for the same key, whatever happened in between.
    """

    def __init__(self, seed, stream=STREAM_GAMMA, path=0, step=0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.path = int(path)
        self.step = int(step)

    def normals(self, n):
        z = normals(self.seed, self.stream, self.path, self.step, 0, n)
        self.step += 1
        return z

    def jump_to(self, step):
        self.step = int(step)
        return self

    def __repr__(self):
        return ("CounterStream(seed=%d, stream=%d, path=%d, step=%d)"
                % (self.seed, self.stream, self.path, self.step))
