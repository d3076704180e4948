from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from densitylab.constructions import diag_not_coarse
from densitylab.density import NatSetPrefix, prefix_density
from densitylab.errors import ContradictionError
from densitylab.generic import (
    LimitApprox,
    PairDecider,
    SetStream,
    coarse_from_limit,
    coarse_prefix,
    decode_from_coarse,
    densely_approximable_report,
    generic_from_pair,
    generic_similarity_verdict,
    limit_from_coarse,
)
from densitylab.machines import MachineUniverse
from densitylab.partition import encode_R, r_slice

from oracles import naive_r_index


def evens():
    return SetStream.from_predicate(lambda m: m % 2 == 0)


def odds():
    return SetStream.from_predicate(lambda m: m % 2 == 1)


class TestPairDecider:
    def test_evens_odds(self):
        D = generic_from_pair(evens(), odds())
        assert D(7, budget=100) == 1
        assert D(8, budget=100) == 0

    def test_empty_streams(self):
        D = generic_from_pair(SetStream([]), SetStream([]))
        assert D(3, budget=50) is None

    def test_budget(self):
        D = generic_from_pair(evens(), odds())
        assert D(40, budget=10) is None
        assert D(40, budget=100) == 0

    def test_contradiction(self):
        D = PairDecider(SetStream([1, 2]), SetStream([2]))
        # only noticed once both streams have produced the point
        D.C0.fill(2)
        D.C1.fill(1)
        with pytest.raises(ContradictionError):
            D(2, budget=10)

    @given(st.sets(st.integers(0, 60)), st.integers(0, 60), st.integers(0, 200))
    def test_sound(self, A, x, budget):
        C0 = SetStream(sorted(set(range(61)) - A))
        C1 = SetStream(sorted(A))
        ans = generic_from_pair(C0, C1)(x, budget)
        assert ans is None or ans == int(x in A)

    def test_machine_streams(self):
        # W_3 is the evens, W_1 everything: use W_3 against odds
        U = MachineUniverse.standard()
        C0 = SetStream.from_machine(U, 3, 400)
        C1 = odds()
        D = PairDecider(C0, C1)
        dom = D.domain_prefix(255, 200)
        union = NatSetPrefix.from_elements(
            [m for m in C0.enumerated + C1.enumerated if m <= 255], 256
        )
        assert dom == union
        assert prefix_density(dom, 255) == 1


class TestReport:
    def test_evens_odds(self):
        assert densely_approximable_report(evens(), odds(), 250, 999) == (True, Fraction(500, 1000))
        assert densely_approximable_report(evens(), odds(), 500, 999) == (True, 1)

    def test_overlap(self):
        ok, _ = densely_approximable_report(SetStream([1, 2]), SetStream([2, 3]), 5, 10)
        assert not ok


class TestCoarse:
    def test_examples(self):
        assert coarse_from_limit(LimitApprox.constant({0}), 7) == 1
        L = LimitApprox.constant(set())
        assert all(coarse_from_limit(L, n) == 0 for n in range(50))
        assert coarse_from_limit(LimitApprox.constant({0, 1, 2}), 0) == 0

    def test_switching_limit(self):
        L = LimitApprox.switching(set(), {1}, 100)
        n = 2**18
        C = coarse_prefix(L, n + 1)
        R1 = encode_R({1}, n + 1)
        assert all(C.bits[m] == R1.bits[m] for m in range(100, n + 1))
        # frozen: the disagreements are the R_1 numbers below 100
        diff = (C ^ R1).elements()
        assert diff == [m for m in range(1, 100) if naive_r_index(m) == 1]
        assert prefix_density(C ^ R1, n) <= Fraction(100, 2**18)

    def test_prefix_matches_pointwise(self):
        L = LimitApprox(lambda s: {k for k in range(5) if (s >> k) & 1})
        C = coarse_prefix(L, 300)
        assert all(C.bits[m] == coarse_from_limit(L, m) for m in range(300))


class TestDecodeFromCoarse:
    def test_examples(self):
        C = encode_R({1}, 2**12 + 1)
        assert decode_from_coarse(C, 1, 2**12) == 1
        assert decode_from_coarse(C, 3, 2**12) == 0
        E = NatSetPrefix.empty(2**12 + 1)
        assert all(decode_from_coarse(E, n, 2**12) == 0 for n in range(8))

    def test_exact_threshold(self):
        # R_1 below 9 is {2, 6}: 2 hits, and 2 * 2^3 >= 9 + 1 but 2 * 2^3 < 16 + 1
        C = encode_R({1}, 64)
        assert decode_from_coarse(C, 1, 9) == 1
        assert decode_from_coarse(C, 1, 15) == 1
        assert decode_from_coarse(NatSetPrefix.from_elements([2], 64), 1, 15) == 0

    def test_stage_must_be_positive(self):
        with pytest.raises(ValueError):
            decode_from_coarse(NatSetPrefix.empty(4), 0, 0)

    def test_exact_coded_set_burn_in(self):
        for n in range(11):
            for A in ({n}, set(), set(range(11))):
                bound = 2 ** (n + 5)
                C = encode_R(A, bound)
                for s in range(2 ** (n + 2), bound, max(1, bound // 37)):
                    assert decode_from_coarse(C, n, s) == int(n in A)

    def test_round_trip_through_limit(self):
        A = {0, 2, 5}
        L = LimitApprox.switching({1, 3, 4, 6, 7}, A, 100)
        C = coarse_prefix(L, 2**16 + 1)
        assert [decode_from_coarse(C, n, 2**16) for n in range(8)] == [
            int(n in A) for n in range(8)
        ]
        back = limit_from_coarse(C)
        assert back(4096) & set(range(8)) == A


class TestSimilarity:
    def test_equal(self):
        A = r_slice(2, 512)
        rep = generic_similarity_verdict(A, A, [63, 127, 255, 511])
        assert all(rho == 0 for _, rho in rep.samples)
        assert rep.looks_similar

    def test_finite_difference(self):
        A = r_slice(0, 4096)
        B = A ^ NatSetPrefix.from_elements([2, 4, 7], 4096)
        rep = generic_similarity_verdict(A, B, [511, 1023, 2047, 4095])
        for n, rho in rep.samples:
            assert rho <= Fraction(3, n + 1)
        assert rep.looks_similar

    def test_csv(self):
        A = NatSetPrefix.from_elements([1], 8)
        rep = generic_similarity_verdict(A, NatSetPrefix.empty(8), [3, 7])
        assert rep.to_csv() == "n,symdiff_num,symdiff_den\n3,1,4\n7,1,8\n"

    def test_diagonal_set_differs_from_co_c_e_sets(self):
        # A ∩ R_e = W_e ∩ R_e, so A △ complement(W_e) covers R_e
        U = MachineUniverse.standard()
        stages = 4096
        A = diag_not_coarse(U, stages, 16).prefix("A", stages)
        for e in (1, 2, 3):
            W = NatSetPrefix.from_elements(
                [x for x in range(stages) if U.halts_within(e, x, stages)], stages
            )
            co_W = W.complement()
            rep = generic_similarity_verdict(
                A, co_W, [1023, 2047, 4095], within=r_slice(e, stages)
            )
            for n, rho in rep.samples:
                assert rho == prefix_density(r_slice(e, stages), n)
                assert rho >= Fraction(1, 2 ** (e + 1)) - Fraction(1, n + 1)
