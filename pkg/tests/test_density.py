from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from densitylab.density import (
    DensityProfile,
    NatSetPrefix,
    WordSetPrefix,
    density_profile,
    prefix_density,
    rca_check,
    relative_density,
    strong_genericity_fit,
    symdiff_density,
    word_prefix_density,
    words_upto,
)
from densitylab.errors import InsufficientKnowledgeError, UndefinedRatioError
from densitylab.partition import encode_R, r_slice

from oracles import brute_count, brute_density

bitsets = st.lists(st.booleans(), min_size=1, max_size=200).map(lambda b: NatSetPrefix(np.array(b)))


def pair_of_sets():
    return st.integers(1, 200).flatmap(
        lambda n: st.tuples(
            st.lists(st.booleans(), min_size=n, max_size=n),
            st.lists(st.booleans(), min_size=n, max_size=n),
        )
    ).map(lambda t: (NatSetPrefix(np.array(t[0])), NatSetPrefix(np.array(t[1]))))


class TestNatSetPrefix:
    def test_queries_above_bound_are_rejected(self):
        A = NatSetPrefix.from_elements([1, 3], 10)
        assert 3 in A and 2 not in A
        with pytest.raises(InsufficientKnowledgeError):
            A.count_upto(10)
        with pytest.raises(InsufficientKnowledgeError):
            _ = 10 in A

    def test_bits_are_read_only(self):
        A = NatSetPrefix.from_elements([1], 4)
        with pytest.raises(ValueError):
            A.bits[0] = True

    @given(bitsets)
    def test_cardinality_is_popcount(self, A):
        assert A.cardinality() == int(A.bits.sum()) == len(A.elements())

    def test_set_algebra(self):
        A = NatSetPrefix.from_elements([0, 1, 2], 5)
        B = NatSetPrefix.from_elements([2, 3], 5)
        assert (A | B).elements() == [0, 1, 2, 3]
        assert (A & B).elements() == [2]
        assert (A ^ B).elements() == [0, 1, 3]
        assert (A - B).elements() == [0, 1]
        assert A.complement().elements() == [3, 4]


class TestPrefixDensity:
    def test_odds(self):
        odds = NatSetPrefix(np.arange(10) % 2 == 1)
        assert prefix_density(odds, 9) == Fraction(1, 2)

    def test_empty(self):
        assert prefix_density(NatSetPrefix.empty(101), 100) == 0

    def test_r2_prefix(self):
        # {4, 12, 20, 28} below 32
        assert prefix_density(r_slice(2, 32), 31) == Fraction(4, 32) == Fraction(1, 8)

    def test_beyond_bound(self):
        with pytest.raises(InsufficientKnowledgeError):
            prefix_density(NatSetPrefix.empty(5), 5)

    @given(bitsets, st.data())
    def test_matches_brute_count(self, A, data):
        n = data.draw(st.integers(0, A.bound - 1))
        assert prefix_density(A, n) == brute_density(lambda m: bool(A.bits[m]), n)

    @given(bitsets, st.data())
    def test_range_and_extremes(self, A, data):
        n = data.draw(st.integers(0, A.bound - 1))
        rho = prefix_density(A, n)
        assert 0 <= rho <= 1
        assert (rho == 0) == (not A.bits[: n + 1].any())
        assert (rho == 1) == bool(A.bits[: n + 1].all())


class TestProperties:
    @given(pair_of_sets(), st.data())
    def test_finite_additivity(self, sets, data):
        A, B = sets
        B = B - A
        n = data.draw(st.integers(0, A.bound - 1))
        assert prefix_density(A | B, n) == prefix_density(A, n) + prefix_density(B, n)

    @given(pair_of_sets(), st.data())
    def test_triangle_bound_and_symmetry(self, sets, data):
        A, B = sets
        n = data.draw(st.integers(0, A.bound - 1))
        d = symdiff_density(A, B, n)
        assert abs(prefix_density(A, n) - prefix_density(B, n)) <= d
        assert d == symdiff_density(B, A, n)

    @given(pair_of_sets(), st.data())
    def test_monotone(self, sets, data):
        A, B = sets
        n = data.draw(st.integers(0, A.bound - 1))
        assert prefix_density(A & B, n) <= prefix_density(B, n)


class TestDensityProfile:
    def test_omega(self):
        p = density_profile(NatSetPrefix.full(100), [9, 99])
        assert [rho for _, rho in p.samples] == [1, 1]
        assert (p.upper_estimate, p.lower_estimate) == (1, 1)

    def test_coded_set_tends_to_three_quarters(self):
        bound = 2**16
        A = encode_R({0, 1}, bound)
        points = [2**k - 1 for k in range(8, 17)]
        p = density_profile(A, points)
        for n, rho in p.samples:
            assert abs(rho - Fraction(3, 4)) <= Fraction(2, n + 1)
        # odds together with 2 mod 4
        assert p.samples[0][1] == brute_density(lambda m: m % 2 == 1 or m % 4 == 2, 255)

    def test_oscillating(self):
        bound = 2**14
        m = np.arange(bound)
        bits = np.zeros(bound, dtype=bool)
        bits[1:] = (np.floor(np.log2(m[1:])).astype(int) % 2) == 0
        A = NatSetPrefix(bits)
        p = density_profile(A, [2**k - 1 for k in range(4, 15)])
        assert p.upper_estimate > p.lower_estimate
        # frozen: at 2^14 - 1 the set holds 1 + 4 + 16 + ... + 4096 = 5461 elements
        assert p.samples[-1][1] == Fraction(5461, 2**14)

    def test_errors(self):
        A = NatSetPrefix.full(10)
        with pytest.raises(ValueError):
            density_profile(A, [])
        with pytest.raises(ValueError):
            density_profile(A, [5, 3])

    def test_csv(self):
        p = density_profile(r_slice(3, 1024), [31, 1023])
        assert p.to_csv() == "n,rho_num,rho_den,rho_float\n31,1,16,0.0625\n1023,1,16,0.0625\n"

    @given(bitsets)
    def test_estimates_ordered(self, A):
        points = sorted(set(range(0, A.bound, 7)))
        p = density_profile(A, points)
        assert p.lower_estimate <= p.upper_estimate


class TestRelativeDensity:
    def test_identity_and_empty(self):
        B = NatSetPrefix(np.arange(100) % 2 == 0)
        assert relative_density(B, B, 99) == 1
        assert relative_density(NatSetPrefix.empty(100), B, 99) == 0

    def test_multiples_of_four_in_evens(self):
        A = NatSetPrefix(np.arange(100) % 4 == 0)
        B = NatSetPrefix(np.arange(100) % 2 == 0)
        assert relative_density(A, B, 99) == Fraction(25, 50)

    def test_errors(self):
        with pytest.raises(UndefinedRatioError):
            relative_density(NatSetPrefix.empty(5), NatSetPrefix.empty(5), 4)
        with pytest.raises(ValueError):
            relative_density(NatSetPrefix.full(5), NatSetPrefix.from_elements([1], 5), 4)


class TestSymdiff:
    def test_examples(self):
        ev = NatSetPrefix(np.arange(50) % 2 == 0)
        od = NatSetPrefix(np.arange(50) % 2 == 1)
        assert symdiff_density(ev, ev, 49) == 0
        assert symdiff_density(ev, od, 49) == 1
        assert symdiff_density(encode_R({1}, 64), NatSetPrefix.empty(64), 63) == Fraction(16, 64)


class TestRca:
    def test_partition_pieces(self):
        n = 2**10 - 1
        lhs, rhs = rca_check([r_slice(k, n + 1) for k in range(6)], n)
        assert lhs == rhs
        assert lhs == Fraction(brute_count(lambda m: m >= 1 and (m & -m) < 64, n), n + 1)

    def test_empty(self):
        assert rca_check([], 10) == (0, 0)

    def test_overlap(self):
        with pytest.raises(ValueError):
            rca_check([NatSetPrefix.full(4), NatSetPrefix.from_elements([2], 4)], 3)

    def test_twenty_slices(self):
        n = 2**20 - 1
        lhs, rhs = rca_check([r_slice(k, n + 1) for k in range(21)], n)
        assert lhs == rhs
        # only 0 is missed
        assert lhs == 1 - Fraction(1, 2**20)


class TestGenericityFit:
    def test_contains_a_one(self):
        W = WordSetPrefix.from_predicate(lambda w: 1 in w, 2, 18)
        samples = tuple((n, word_prefix_density(W, n)) for n in range(2, 19))
        for n, rho in samples:
            # the words with no 1 are the n+1 words 0^j, j <= n
            assert 1 - rho == Fraction(n + 1, 2 ** (n + 1) - 1)
        fit = strong_genericity_fit(DensityProfile(samples, samples[-1][1], samples[-1][1]))
        assert fit is not None and not fit.degenerate
        assert abs(float(fit.sigma) - 0.5) < 0.1
        for n, rho in samples:
            assert 1 - rho <= fit.bound_at(n)

    def test_evens_do_not_fit(self):
        E = NatSetPrefix(np.arange(5000) % 2 == 0)
        assert strong_genericity_fit(density_profile(E, [2**k for k in range(3, 13)])) is None

    def test_omega_is_degenerate(self):
        fit = strong_genericity_fit(density_profile(NatSetPrefix.full(100), [9, 99]))
        assert fit.degenerate and fit.C == 1


class TestWords:
    def test_word_counts(self):
        assert words_upto(2, 4) == 31
        assert words_upto(3, 2) == 13
        assert words_upto(1, 5) == 6

    def test_all_words(self):
        S = WordSetPrefix.from_predicate(lambda w: True, 2, 6)
        assert all(word_prefix_density(S, n) == 1 for n in range(7))

    def test_even_length(self):
        S = WordSetPrefix.from_predicate(lambda w: len(w) % 2 == 0, 2, 4)
        assert word_prefix_density(S, 4) == Fraction(21, 31)

    def test_beyond_bound(self):
        S = WordSetPrefix.from_predicate(lambda w: True, 2, 3)
        with pytest.raises(InsufficientKnowledgeError):
            word_prefix_density(S, 4)

    def test_from_words_and_membership(self):
        S = WordSetPrefix.from_words(["01", "1"], 2, 3)
        assert "01" in S and (1,) in S and "0" not in S
        assert S.words(as_str=True) == ["1", "01"]
