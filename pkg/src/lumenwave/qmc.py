"""Deterministic low-discrepancy sampling primitives.

Everything here is seed-free: scrambling permutations are derived from the
base alone, so every worker in a render cluster generates the same sample
for the same (pixel, iteration, dimension) triple.  The hot per-sample code
lives in ``lumenwave.core._kernels``; this module owns table construction
and the exact (arbitrary-precision) reference paths used by the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "ScrambledBase",
    "FastDivisor",
    "primes",
    "faure_permutation",
    "scrambled_base",
    "radical_inverse",
    "prepare_fast_divisor",
    "fast_divide",
    "global_sample_index",
    "vdc_permute",
    "DimensionTable",
]

_U64_MASK = (1 << 64) - 1


def primes(count: int) -> np.ndarray:
    """First `count` primes, ascending."""
    if count <= 0:
        return np.empty(0, dtype=np.int64)
    # p_n < n(ln n + ln ln n) for n >= 6
    bound = 15
    if count >= 6:
        n = float(count)
        bound = int(n * (np.log(n) + np.log(np.log(n)))) + 10
    while True:
        sieve = np.ones(bound, dtype=bool)
        sieve[:2] = False
        for p in range(2, int(bound**0.5) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        found = np.flatnonzero(sieve)
        if len(found) >= count:
            return found[:count].astype(np.int64)
        bound *= 2


@lru_cache(maxsize=None)
def _faure_tuple(base: int) -> tuple:
    if base < 1:
        raise ValueError("base must be >= 1")
    if base == 1:
        return (0,)
    if base == 2:
        return (0, 1)
    if base % 2 == 0:
        half = _faure_tuple(base // 2)
        return tuple(2 * v for v in half) + tuple(2 * v + 1 for v in half)
    c = base // 2
    prev = _faure_tuple(base - 1)
    bumped = [v + 1 if v >= c else v for v in prev]
    return tuple(bumped[:c]) + (c,) + tuple(bumped[c:])


def faure_permutation(base: int) -> np.ndarray:
    """Digit-scrambling permutation for `base`, derived from the base alone.

    Recursive construction: even bases interleave the doubled half-base
    permutation, odd bases insert the middle digit.  sigma(0) == 0 for every
    base, so finite digit expansions keep their zero tail, and base 2 is the
    identity (pure bit reversal).
    """
    return np.asarray(_faure_tuple(base), dtype=np.int64)


@dataclass(frozen=True)
class ScrambledBase:
    """A prime base plus its digit-scrambling table."""

    base: int
    permutation_digits: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.permutation_digits, dtype=np.int64)
        if perm.shape != (self.base,) or sorted(perm.tolist()) != list(range(self.base)):
            raise ValueError("permutation_digits must be a bijection on 0..base-1")
        object.__setattr__(self, "permutation_digits", perm)


@lru_cache(maxsize=None)
def scrambled_base(base: int) -> ScrambledBase:
    return ScrambledBase(base, faure_permutation(base))


def _reverse_bits64(v: int) -> int:
    v &= _U64_MASK
    v = ((v & 0x5555555555555555) << 1) | ((v >> 1) & 0x5555555555555555)
    v = ((v & 0x3333333333333333) << 2) | ((v >> 2) & 0x3333333333333333)
    v = ((v & 0x0F0F0F0F0F0F0F0F) << 4) | ((v >> 4) & 0x0F0F0F0F0F0F0F0F)
    v = ((v & 0x00FF00FF00FF00FF) << 8) | ((v >> 8) & 0x00FF00FF00FF00FF)
    v = ((v & 0x0000FFFF0000FFFF) << 16) | ((v >> 16) & 0x0000FFFF0000FFFF)
    return ((v << 32) | (v >> 32)) & _U64_MASK


def radical_inverse(base: ScrambledBase | int, index: int) -> float:
    """Scrambled radical inverse of `index` in [0, 1).

    Digits are extracted and permuted in integer arithmetic; the single
    floating-point operation is the final scale, so the result is the
    correctly rounded value of the exact rational for the full 64-bit
    index range.
    """
    if isinstance(base, int):
        base = scrambled_base(base)
    if not 0 <= index < (1 << 64):
        raise ValueError("index must fit in 64 bits")
    b = base.base
    if b == 2:
        return _reverse_bits64(index) / (1 << 64)
    perm = base.permutation_digits
    reversed_digits = 0
    scale = 1
    while index > 0:
        index, digit = divmod(index, b)
        reversed_digits = reversed_digits * b + int(perm[digit])
        scale *= b
    # int.__truediv__ rounds the exact rational correctly at any magnitude
    return reversed_digits / scale


@dataclass(frozen=True)
class FastDivisor:
    """Strength-reduced unsigned 64-bit division by a fixed divisor.

    divide(n) == n // divisor for every 0 <= n < 2^64, via one widening
    multiply plus shifts (the `add` variant covers magics that do not fit
    in 64 bits).
    """

    divisor: int
    magic: int
    shift: int
    add: bool


def prepare_fast_divisor(divisor: int) -> FastDivisor:
    if divisor < 2:
        raise ValueError("divisor must be >= 2")
    if divisor & (divisor - 1) == 0:
        return FastDivisor(divisor, 0, divisor.bit_length() - 1, False)
    shift = (divisor - 1).bit_length()  # ceil(log2(divisor))
    magic = ((1 << (64 + shift)) + divisor - 1) // divisor
    if magic < (1 << 64):
        return FastDivisor(divisor, magic, shift, False)
    # Magic needs 65 bits: keep the low word and fold the implicit top bit
    # into an extra average step (q + (n-q)/2 computes the 65-bit product).
    return FastDivisor(divisor, magic & _U64_MASK, shift - 1, True)


def _mulhi64(a: int, b: int) -> int:
    return ((a & _U64_MASK) * (b & _U64_MASK)) >> 64


def fast_divide(d: FastDivisor, n: int) -> int:
    """floor(n / d.divisor) using only the precomputed magic constants."""
    if not 0 <= n < (1 << 64):
        raise ValueError("n must fit in 64 bits")
    if d.magic == 0:
        return n >> d.shift
    q = _mulhi64(d.magic, n)
    if d.add:
        q = (((n - q) >> 1) + q) >> d.shift
    else:
        q >>= d.shift
    return q


def global_sample_index(pixel_id: int, iteration: int, pixel_count: int) -> int:
    """Global sample index: samples enumerated over the full screen.

    iteration k spans indices [k * pixel_count, (k+1) * pixel_count), i.e.
    one iteration is exactly one sample per pixel.
    """
    if not 0 <= pixel_id < pixel_count:
        raise ValueError("pixel_id out of range")
    index = iteration * pixel_count + pixel_id
    if index >= (1 << 64):
        raise OverflowError("sample index exceeds 64 bits")
    return index


def _bit_reverse(value: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


@lru_cache(maxsize=64)
def _stray_pairing(stripe_count: int, bits: int) -> dict:
    # Indices whose bit reversal escapes the range are re-paired among
    # themselves, first-with-last, keeping the map an involution.
    strays = [i for i in range(stripe_count) if _bit_reverse(i, bits) >= stripe_count]
    pairing = {}
    m = len(strays)
    for k, s in enumerate(strays):
        pairing[s] = strays[m - 1 - k]
    return pairing


def vdc_permute(stripe_index: int, stripe_count: int) -> int:
    """Self-inverse quasi-random permutation on {0 .. stripe_count-1}.

    Power-of-two counts are the base-2 radical inverse (bit reversal) of
    log2(count) bits.  Other counts use the next power of two and re-pair
    the indices whose reversal lands out of range, preserving both the
    bijection and the involution property.
    """
    if not 0 <= stripe_index < stripe_count:
        raise ValueError("stripe_index out of range")
    if stripe_count == 1:
        return 0
    bits = (stripe_count - 1).bit_length()
    if stripe_count == (1 << bits):
        return _bit_reverse(stripe_index, bits)
    pairing = _stray_pairing(stripe_count, bits)
    mapped = pairing.get(stripe_index)
    if mapped is not None:
        return mapped
    return _bit_reverse(stripe_index, bits)


# Fixed dimension assignment
# --------------------------
# Eye subpaths:
#   dim 0, 1   pixel anti-aliasing offset
#   dim 2      time (indexed by iteration, not by sample)
#   dim 3      hero wavelength
#   dim 4+8b   per-bounce block b: bsdf u/v, next-event u/v, roulette,
#              volume distance, phase u/v
# Light subpaths use a disjoint block after the eye dimensions:
#   +0 emitter selection, +1,2 emitter position, +3,4 photon aiming,
#   +5 spare, then the same 8-dim per-bounce layout.
DIM_AA_X = 0
DIM_AA_Y = 1
DIM_TIME = 2
DIM_WAVELENGTH = 3
EYE_BOUNCE_BASE = 4
BOUNCE_STRIDE = 8
OFF_BSDF_U = 0
OFF_BSDF_V = 1
OFF_NEE_U = 2
OFF_NEE_V = 3
OFF_ROULETTE = 4
OFF_VOLUME = 5
OFF_PHASE_U = 6
OFF_PHASE_V = 7
LIGHT_HEAD_DIMS = 6
LIGHT_SELECT = 0
LIGHT_POS_U = 1
LIGHT_POS_V = 2
LIGHT_AIM_U = 3
LIGHT_AIM_V = 4


class DimensionTable:
    """Per-dimension Halton bases with scrambling and division tables.

    The flattened arrays are consumed directly by the kernel module.
    """

    def __init__(self, max_depth: int):
        self.max_depth = max_depth
        self.light_base = EYE_BOUNCE_BASE + BOUNCE_STRIDE * max_depth
        ndims = self.light_base + LIGHT_HEAD_DIMS + BOUNCE_STRIDE * max_depth
        self.ndims = ndims
        bases = primes(ndims)
        self.bases = bases
        magic = np.zeros(ndims, dtype=np.uint64)
        shift = np.zeros(ndims, dtype=np.int64)
        add = np.zeros(ndims, dtype=np.int64)
        perm_offset = np.zeros(ndims, dtype=np.int64)
        perm_parts = []
        off = 0
        for i, b in enumerate(bases.tolist()):
            d = prepare_fast_divisor(b)
            magic[i] = d.magic
            shift[i] = d.shift
            add[i] = 1 if d.add else 0
            perm_offset[i] = off
            perm_parts.append(faure_permutation(b))
            off += b
        self.magic = magic
        self.shift = shift
        self.add = add
        self.perm_offset = perm_offset
        self.perm_flat = np.concatenate(perm_parts).astype(np.int64)

    def eye_bounce_dim(self, bounce: int, offset: int) -> int:
        return EYE_BOUNCE_BASE + BOUNCE_STRIDE * bounce + offset

    def light_bounce_dim(self, bounce: int, offset: int) -> int:
        return self.light_base + LIGHT_HEAD_DIMS + BOUNCE_STRIDE * bounce + offset

    def sample(self, dim: int, index: int) -> float:
        """Reference evaluation (exact path); kernels mirror this."""
        return radical_inverse(int(self.bases[dim]), index)
