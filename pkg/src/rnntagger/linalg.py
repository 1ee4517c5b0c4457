"""Small dense-numerics layer shared by every model component.

Vectors and matrices are plain float64 numpy arrays; the helpers here
exist to pin down shape checking, numerically safe nonlinearities, and a
platform-independent RNG so that every run of the toolkit is bit-for-bit
reproducible from a seed.
"""

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4B7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def _mix_scalar(z):
    # SplitMix64 finalizer (Steele, Lea & Flood 2014).
    z = (z ^ (z >> 30)) * MIX1 & MASK64
    z = (z ^ (z >> 27)) * MIX2 & MASK64
    return z ^ (z >> 31)


def _mix_array(z):
    # uint64 array ops wrap silently, matching the masked scalar path
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


class SeededRng:
    """Deterministic SplitMix64 stream.

    The same seed yields the same sequence on every platform, and the
    vectorized draws reproduce the scalar sequence exactly: uniform(n)
    returns what n successive uniform_scalar() calls would.
    """

    def __init__(self, seed):
        self._state = int(seed) & MASK64

    def next_u64(self):
        self._state = (self._state + GOLDEN) & MASK64
        return _mix_scalar(self._state)

    def uniform(self, n, low=0.0, high=1.0):
        """n floats in [low, high), drawn as a single batch."""
        if n < 0:
            raise ValueError("uniform: n must be >= 0, got %d" % n)
        ks = np.arange(1, n + 1, dtype=np.uint64)
        states = np.uint64(self._state) + ks * np.uint64(GOLDEN)
        bits = _mix_array(states)
        self._state = (self._state + n * GOLDEN) & MASK64
        u = (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return low + u * (high - low)

    def uniform_scalar(self, low=0.0, high=1.0):
        u = (self.next_u64() >> 11) * (2.0 ** -53)
        return low + u * (high - low)

    def randint(self, n):
        """Uniform int in [0, n). Plain modulo: every n here (vocab sizes,
        window widths) is tiny relative to 2^64, so the bias is below
        measurement."""
        if n <= 0:
            raise ValueError("randint: n must be positive, got %d" % n)
        return self.next_u64() % n

    def shuffle(self, xs):
        """In-place Fisher-Yates on a list."""
        for i in range(len(xs) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            xs[i], xs[j] = xs[j], xs[i]


def sigmoid(x):
    """Elementwise logistic function, overflow-safe for any float64 input."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x):
    """Softmax with max-subtraction. Rejects empty input."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("softmax: empty input")
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / np.sum(e)


def matvec(m, v):
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(
            "matvec: shape mismatch, matrix %s vs vector %s"
            % (m.shape, v.shape)
        )
    return m @ v


def concat(*vs):
    return np.concatenate([np.asarray(v, dtype=np.float64) for v in vs])


def add(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("add: shape mismatch %s vs %s" % (a.shape, b.shape))
    return a + b


def mul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("mul: shape mismatch %s vs %s" % (a.shape, b.shape))
    return a * b


def axpy(alpha, x, y):
    """y += alpha * x, in place. Returns y."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("axpy: shape mismatch %s vs %s" % (x.shape, y.shape))
    y += alpha * x
    return y


def uniform_init(rng, shape, radius):
    """Matrix/vector filled from U[-radius, radius)."""
    n = int(np.prod(shape))
    return rng.uniform(n, -radius, radius).reshape(shape)


def glorot_radius(fan_in, fan_out):
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def zeros(shape):
    return np.zeros(shape, dtype=np.float64)
