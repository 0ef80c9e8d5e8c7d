"""Message compressors, differential encoding and bit accounting.

Three quantizer families plus a lossless identity:

* q1 -- unbiased probabilistic rounding onto the grid of spacing 1/delta_p
  (floor with probability (ceil_p(x) - x) * delta_p, ceil otherwise);
* q2 -- unbiased norm-scaled b-bit dithered quantizer
  Q(x) = (|x|_inf 2^{-(b-1)} sign(x)) .* floor(2^{b-1} |x| / |x|_inf + mu);
* q3 -- biased deterministic truncation floor_p(x).

States are never compressed directly: the wire carries Q((x - h)/r) for a
tracked reference h and a decaying scale r, so absolute errors shrink as
r does. For q1/q3 the encoder input saturates at +-clamp_range/2 (counted,
reported in the trace) so a message costs a fixed, known number of bits.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .errors import NumericsError, ParameterError

UNCOMPRESSED_BITS = 32  # bits per coordinate without quantization
DEFAULT_CLAMP_RANGE = 7.0
DEFAULT_R_MIN = 1e-12

KINDS = ("identity", "q1", "q2", "q3")


@dataclass(frozen=True)
class CompressorSpec:
    """Tagged compressor choice with its parameters.

    ``delta_p`` (grid density, q1/q3) and ``bits`` (q2) are positive
    integers; ``clamp_range`` bounds the encoder input of the grid
    quantizers and fixes their per-message bit cost.
    """

    kind: str
    delta_p: int = 1
    bits: int = 2
    clamp_range: float = DEFAULT_CLAMP_RANGE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown compressor kind {self.kind!r}, "
                                 f"expected one of {KINDS}")
        if self.delta_p < 1 or int(self.delta_p) != self.delta_p:
            raise ParameterError(f"delta_p must be a positive integer, got {self.delta_p}")
        if self.bits < 1 or int(self.bits) != self.bits:
            raise ParameterError(f"bits must be a positive integer, got {self.bits}")
        if self.kind in ("q1", "q3") and not self.clamp_range > 0:
            raise ParameterError(f"clamp_range must be positive, got {self.clamp_range}")

    def grid_bounds(self):
        """Lowest/highest representable grid index under the clamp."""
        if self.kind in ("q1", "q3"):
            half = self.clamp_range * self.delta_p / 2.0
            return math.ceil(-half), math.floor(half)
        return -math.inf, math.inf


@dataclass(frozen=True)
class ScalingSchedule:
    """Geometric scale r_k = sqrt(h0 * xi^k), floored at r_min."""

    h0: float = 1.0
    xi: float = 0.9604
    r_min: float = DEFAULT_R_MIN

    def __post_init__(self):
        if not self.h0 > 0:
            raise ParameterError(f"h0 must be positive, got {self.h0}")
        if not 0.0 < self.xi <= 1.0:
            raise ParameterError(f"xi must lie in (0, 1], got {self.xi}")
        if not self.r_min > 0:
            raise ParameterError(f"r_min must be positive, got {self.r_min}")


def scaling_factor(k, sched):
    """r_k = max(sqrt(h0 * xi^k), r_min)."""
    if k < 0:
        raise ParameterError(f"iteration index must be nonnegative, got {k}")
    return max(math.sqrt(sched.h0 * sched.xi ** k), sched.r_min)


@dataclass(frozen=True)
class CompressedMessage:
    """What crosses the wire for one broadcast plus bookkeeping.

    ``payload`` is the quantizer output (grid indices for q1/q3, a norm
    and signed levels for q2, the raw vector for identity); ``decoded``
    is the reconstruction of xhat - h; ``bits`` the accounted size.
    """

    payload: object
    bits: int
    decoded: np.ndarray
    saturations: int = 0


def _check_finite(x):
    if not np.isfinite(x).all():
        raise NumericsError("compressor input contains non-finite entries")


def q1_compress(x, delta_p, rng):
    """Unbiased probabilistic rounding onto the grid of spacing 1/delta_p."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_finite(x)
    u = rng.random(x.shape)
    out, _ = kernels.q1_core(x.ravel(), float(delta_p), -math.inf, math.inf,
                             u.ravel())
    return out.reshape(x.shape)


def q2_compress(x, bits, rng):
    """Unbiased norm-scaled b-bit dithered quantizer (zero maps to zero)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_finite(x)
    u = rng.random(x.shape)
    c1 = 2.0 ** (bits - 1)
    pw = 2.0 ** (1 - bits)
    return kernels.q2_core(x.ravel(), c1, pw, u.ravel()).reshape(x.shape)


def q3_compress(x, delta_p):
    """Deterministic truncation to the next lower grid point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_finite(x)
    out, _ = kernels.q3_core(x.ravel(), float(delta_p), -math.inf, math.inf)
    return out.reshape(x.shape)


def reference_update(h, x_hat, alpha):
    """Momentum step h <- (1 - alpha) h + alpha xhat."""
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    return (1.0 - alpha) * np.asarray(h, dtype=float) + alpha * np.asarray(x_hat, dtype=float)


def bits_per_message(spec, n, clamp_range=None):
    """Accounted bits for one n-coordinate broadcast.

    q1/q3 pay ceil(log2(floor(range * delta_p) + 1)) bits per coordinate;
    q2 pays b bits per coordinate plus one 32-bit norm scalar; identity
    pays the plain 32-bit format.
    """
    if spec.kind == "identity":
        return UNCOMPRESSED_BITS * n
    if spec.kind == "q2":
        return spec.bits * n + UNCOMPRESSED_BITS
    rng_width = spec.clamp_range if clamp_range is None else clamp_range
    if not rng_width > 0:
        raise ParameterError(f"clamp_range must be positive, got {rng_width}")
    levels = int(math.floor(rng_width * spec.delta_p)) + 1
    return (levels - 1).bit_length() * n  # == ceil(log2(levels))


def scaled_diff_encode(x, h, r, spec, rng):
    """Differential encode: xhat = h + r * Q((x - h)/r).

    Returns the reconstruction every receiver arrives at plus the message
    that produced it; decoding the payload against the same (h, r)
    reproduces ``x_hat`` bit-exactly.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if not r > 0:
        raise ParameterError(f"scaling factor must be positive, got {r}")
    n = x.shape[0]
    nbits = bits_per_message(spec, n)
    if spec.kind == "identity":
        x_hat = x.copy()
        return x_hat, CompressedMessage(payload=x.copy(), bits=nbits,
                                        decoded=x - h)
    v = (x - h) / r
    _check_finite(v)
    if spec.kind == "q1":
        lo, hi = spec.grid_bounds()
        u = rng.random(n)
        out, nsat = kernels.q1_core(v, float(spec.delta_p), float(lo), float(hi), u)
        payload = np.round(out * spec.delta_p).astype(np.int64)
    elif spec.kind == "q3":
        lo, hi = spec.grid_bounds()
        out, nsat = kernels.q3_core(v, float(spec.delta_p), float(lo), float(hi))
        payload = np.round(out * spec.delta_p).astype(np.int64)
    else:  # q2
        u = rng.random(n)
        c1 = 2.0 ** (spec.bits - 1)
        pw = 2.0 ** (1 - spec.bits)
        out = kernels.q2_core(v, c1, pw, u)
        nrm = float(np.abs(v).max())
        levels = (np.sign(v) * np.floor(c1 * np.abs(v) / nrm + u)).astype(np.int64) \
            if nrm > 0 else np.zeros(n, dtype=np.int64)
        payload = (nrm, levels)
        nsat = 0
    decoded = r * out
    x_hat = h + decoded
    return x_hat, CompressedMessage(payload=payload, bits=nbits,
                                    decoded=decoded, saturations=nsat)


def decode(payload, h, r, spec):
    """Reconstruct xhat from a received payload (bit-exact vs. the encoder)."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if spec.kind == "identity":
        return np.asarray(payload, dtype=float).copy()
    if spec.kind in ("q1", "q3"):
        out = np.asarray(payload, dtype=float) / spec.delta_p
    else:
        nrm, levels = payload
        pw = 2.0 ** (1 - spec.bits)
        out = (nrm * pw) * np.asarray(levels, dtype=float)
    return h + r * out
