"""Low-discrepancy sampling: exact oracles for the radical inverse, the
strength-reduced divider, sample enumeration and the stripe permutation."""

from fractions import Fraction

import numpy as np
import pytest

from lumenwave import qmc
from lumenwave.core import kernels


def oracle_radical_inverse(base: int, perm, index: int) -> Fraction:
    """Big-rational reference evaluator: permuted digit reversal, exact."""
    rev = 0
    scale = 1
    while index > 0:
        index, d = divmod(index, base)
        rev = rev * base + int(perm[d])
        scale *= base
    return Fraction(rev, scale)


class TestRadicalInverse:
    def test_base2_small(self):
        assert qmc.radical_inverse(2, 1) == 0.5
        assert qmc.radical_inverse(2, 6) == 0.375  # 110b -> 0.011b

    def test_base2_bit_level(self):
        # reversed-bit fraction, exact at the bit level
        for idx in [1, 2, 3, 5, 1023, 123456789, (1 << 52) + 12345]:
            bits = bin(idx)[2:]
            expected = Fraction(int(bits[::-1], 2), 1 << len(bits))
            assert qmc.radical_inverse(2, idx) == float(expected)

    def test_base3_unscrambled_first_digit(self):
        plain = qmc.ScrambledBase(3, np.arange(3))
        assert qmc.radical_inverse(plain, 1) == pytest.approx(1 / 3, abs=1e-15)

    def test_base5_scrambled_against_rational_oracle(self):
        sb = qmc.scrambled_base(5)
        idx = np.unique(np.concatenate([
            np.arange(2000),
            np.linspace(0, 10**6, 4096).astype(np.int64),
        ]))
        for i in idx.tolist():
            expected = oracle_radical_inverse(5, sb.permutation_digits, i)
            assert qmc.radical_inverse(sb, i) == float(expected)

    @pytest.mark.parametrize("base", [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97])
    def test_oracle_equality_all_bases_to_97(self, base):
        sb = qmc.scrambled_base(base)
        rng = np.random.default_rng(base)
        idx = np.concatenate([np.arange(256), rng.integers(0, 10**6, 512)])
        for i in idx.tolist():
            expected = oracle_radical_inverse(base, sb.permutation_digits, int(i))
            assert qmc.radical_inverse(sb, int(i)) == float(expected)

    def test_kernel_matches_python_api(self):
        table = qmc.DimensionTable(max_depth=4)
        rng = np.random.default_rng(7)
        idx = rng.integers(0, 2**40, 256)
        out = np.zeros(256)
        for dim in [0, 1, 2, 3, 9, 17, 30]:
            kernels.halton_batch(table.bases, table.perm_flat, table.perm_offset, dim, idx, out)
            for k, i in enumerate(idx.tolist()):
                assert out[k] == qmc.radical_inverse(int(table.bases[dim]), i)

    def test_full_64bit_range_accepted(self):
        v = qmc.radical_inverse(3, 2**64 - 1)
        assert 0.0 <= v < 1.0
        with pytest.raises(ValueError):
            qmc.radical_inverse(3, 2**64)

    def test_equidistribution_beats_prng(self):
        # 1-D star discrepancy over 2^14 points: Halton far below uniform PRNG
        n = 2**14
        for base in (2, 5, 97):
            pts = np.sort([qmc.radical_inverse(base, i) for i in range(n)])
            i = np.arange(n)
            d_star = max(np.max(np.abs(pts - i / n)), np.max(np.abs(pts - (i + 1) / n)))
            prng = np.sort(np.random.default_rng(base).random(n))
            d_prng = max(np.max(np.abs(prng - i / n)), np.max(np.abs(prng - (i + 1) / n)))
            assert d_star < d_prng

    def test_permutation_is_bijection(self):
        for base in qmc.primes(60).tolist():
            perm = qmc.faure_permutation(base)
            assert sorted(perm.tolist()) == list(range(base))
            assert perm[0] == 0  # zero digit fixed: finite expansions keep zero tails
        assert qmc.faure_permutation(2).tolist() == [0, 1]

    def test_scrambled_base_validation(self):
        with pytest.raises(ValueError):
            qmc.ScrambledBase(3, np.array([0, 0, 2]))


class TestFastDivisor:
    def test_trivial(self):
        d = qmc.prepare_fast_divisor(3)
        assert qmc.fast_divide(d, 10) == 3

    def test_invalid_divisor(self):
        with pytest.raises(ValueError):
            qmc.prepare_fast_divisor(1)
        with pytest.raises(ValueError):
            qmc.prepare_fast_divisor(0)

    def test_exhaustive_reduced_width(self):
        # all n < 2^20, all prime divisors < 1000
        n = np.arange(1 << 20, dtype=np.uint64)
        for p in qmc.primes(168).tolist():  # primes below 1000
            d = qmc.prepare_fast_divisor(p)
            got = _divide_batch(d, n)
            assert np.array_equal(got, n // np.uint64(p)), f"divisor {p}"

    def test_boundary_value(self):
        d = qmc.prepare_fast_divisor(9999991)
        n = 2**64 - 1
        assert qmc.fast_divide(d, n) == n // 9999991

    def test_random_64bit(self):
        rng = np.random.default_rng(123)
        n = rng.integers(0, 2**64, 10**6, dtype=np.uint64)
        for p in [3, 5, 7, 97, 1009, 65537, 9999991, 2**31 - 1]:
            d = qmc.prepare_fast_divisor(p)
            got = _divide_batch(d, n)
            assert np.array_equal(got, n // np.uint64(p)), f"divisor {p}"
            for v in [0, 1, p - 1, p, p + 1, 2**63, 2**64 - 1]:
                assert qmc.fast_divide(d, v) == v // p


def _divide_batch(d: qmc.FastDivisor, n: np.ndarray) -> np.ndarray:
    """Vectorised mirror of fast_divide for bulk verification."""
    if d.magic == 0:
        return n >> np.uint64(d.shift)
    magic = np.uint64(d.magic)
    lo32 = np.uint64(0xFFFFFFFF)
    a_lo, a_hi = magic & lo32, magic >> np.uint64(32)
    b_lo, b_hi = n & lo32, n >> np.uint64(32)
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    carry = ((lo_lo >> np.uint64(32)) + (hi_lo & lo32) + (lo_hi & lo32)) >> np.uint64(32)
    q = hi_hi + (hi_lo >> np.uint64(32)) + (lo_hi >> np.uint64(32)) + carry
    if d.add:
        q = ((n - q) >> np.uint64(1)) + q
    return q >> np.uint64(d.shift)


class TestSampleEnumeration:
    def test_first_pixel(self):
        assert qmc.global_sample_index(0, 0, 100) == 0

    def test_formula(self):
        assert qmc.global_sample_index(7, 2, 100) == 207

    def test_bijective_over_grid(self):
        seen = set()
        for it in range(256):
            for px in range(64 * 64 // 16):  # stride the grid to keep runtime sane
                seen.add(qmc.global_sample_index(px * 16, it, 64 * 64))
        assert len(seen) == 256 * (64 * 64 // 16)

    def test_overflow_is_hard_error(self):
        with pytest.raises(OverflowError):
            qmc.global_sample_index(0, 2**40, 2**25)

    def test_pixel_range_checked(self):
        with pytest.raises(ValueError):
            qmc.global_sample_index(100, 0, 100)


class TestVdcPermute:
    def test_count8_is_bit_reversal(self):
        assert [qmc.vdc_permute(i, 8) for i in range(8)] == [0, 4, 2, 6, 1, 5, 3, 7]

    def test_self_inverse_many_counts(self):
        counts = [1, 2, 3, 4, 5, 6, 7, 12, 100, 127, 128, 129, 1000, 4096, 2**20]
        for c in counts:
            sample = range(c) if c <= 4096 else np.random.default_rng(1).integers(0, c, 512).tolist()
            for i in sample:
                j = qmc.vdc_permute(int(i), c)
                assert 0 <= j < c
                assert qmc.vdc_permute(j, c) == i

    def test_count6_bijection_and_involution(self):
        m = [qmc.vdc_permute(i, 6) for i in range(6)]
        assert sorted(m) == list(range(6))
        for i in range(6):
            assert qmc.vdc_permute(m[i], 6) == i

    def test_bijection_non_pow2(self):
        for c in [3, 5, 6, 100, 771]:
            m = [qmc.vdc_permute(i, c) for i in range(c)]
            assert sorted(m) == list(range(c))


class TestDimensionTable:
    def test_layout(self):
        t = qmc.DimensionTable(max_depth=8)
        assert t.bases[0] == 2 and t.bases[1] == 3 and t.bases[2] == 5
        assert t.eye_bounce_dim(0, qmc.OFF_BSDF_U) == 4
        assert t.eye_bounce_dim(1, qmc.OFF_NEE_U) == 4 + 8 + 2
        assert t.light_bounce_dim(0, 0) == t.light_base + qmc.LIGHT_HEAD_DIMS
        # every base prime, strictly increasing
        b = t.bases
        assert np.all(b[1:] > b[:-1])

    def test_reference_sample(self):
        t = qmc.DimensionTable(max_depth=2)
        assert t.sample(0, 1) == 0.5
