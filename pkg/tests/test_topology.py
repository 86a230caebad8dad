import numpy as np
import pytest

from delaysched.errors import NonDistinctDelays
from delaysched.topology import (
    BigPower,
    CriticalSets,
    DelayTable,
    InterferenceSpec,
    complexity_sample_paths,
    complexity_threshold_vectors,
    conditioning_pairs,
    critical_sets_H,
    critical_sets_R,
    tau_l_max,
    tau_max,
    worst_case_rearrange,
    worst_case_threshold_vectors,
)

TABLE1 = DelayTable(((0, 1, 3), (2, 0, 4), (1, 2, 0)))
TABLE4 = DelayTable(((0, 4, 1, 1), (1, 0, 1, 2), (1, 1, 0, 5), (3, 1, 1, 0)))
# three links whose off-diagonal delays are already in worst-case form
EXAMPLE2 = DelayTable(((0, 11, 7), (9, 0, 8), (12, 6, 0)))


def random_table(rng, n, hi=9):
    m = rng.integers(1, hi, size=(n, n))
    np.fill_diagonal(m, 0)
    return DelayTable(tuple(tuple(int(x) for x in row) for row in m))


class TestDelayTable:
    def test_validation(self):
        with pytest.raises(ValueError):
            DelayTable(((1, 1), (1, 0)))  # non-zero diagonal
        with pytest.raises(ValueError):
            DelayTable(((0, -1), (1, 0)))
        with pytest.raises(ValueError):
            DelayTable(((0, 1), (1, 0)), mask={3})

    def test_tau_max(self):
        assert tau_max(TABLE1) == 4
        assert tau_max(TABLE4) == 5
        assert tau_max(DelayTable(((0, 0), (0, 0)))) == 0

    def test_tau_l_max(self):
        assert [tau_l_max(TABLE1, l) for l in range(3)] == [3, 4, 2]
        t2 = DelayTable(((0, 1), (7, 0)))
        assert tau_l_max(t2, 0) == 1
        assert tau_l_max(t2, 1) == 7

    def test_tau_l_max_after_masking(self):
        masked = TABLE4.with_mask({0})
        assert tau_l_max(masked, 3) == 1
        assert tau_l_max(masked, 2) == 5

    def test_tau_l_max_bounded_by_tau_max(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            t = random_table(rng, rng.integers(2, 6))
            tm = tau_max(t)
            assert all(tau_l_max(t, l) <= tm for l in t.links)

    def test_masking_never_raises_tau_l_max(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = rng.integers(3, 6)
            t = random_table(rng, n)
            drop = int(rng.integers(0, n))
            masked = t.with_mask({drop})
            for l in masked.links:
                assert tau_l_max(masked, l) <= tau_l_max(t, l)

    def test_submatrix(self):
        assert TABLE4.submatrix(2).delays == ((0, 4), (1, 0))


class TestInterference:
    def test_complete(self):
        spec = InterferenceSpec.complete(3)
        assert spec.is_complete()
        assert spec.interferers[0] == frozenset({1, 2})

    def test_self_interference_rejected(self):
        with pytest.raises(ValueError):
            InterferenceSpec((frozenset({0}), frozenset()), (0.0, 0.0))

    def test_gamma_integrality(self):
        spec = InterferenceSpec.complete(2, gamma=0.5)
        spec.validate_integral_collisions((2, 4))
        with pytest.raises(ValueError):
            spec.validate_integral_collisions((1, 2))


class TestCriticalSets:
    def test_example_delays_per_link(self):
        cs = critical_sets_R(EXAMPLE2)
        assert cs.per_link[0] == {(0, 11), (0, 7), (1, 9), (2, 12)}
        assert cs.per_link[1] == {(0, 11), (1, 9), (1, 8), (2, 12), (2, 6)}
        assert cs.per_link[2] == {(0, 11), (0, 7), (1, 9), (1, 8), (2, 12), (2, 6)}

    def test_network_set_table1_h(self):
        cs = critical_sets_H(TABLE1)
        assert cs.network == {(0, 1), (0, 3), (1, 2), (1, 4), (2, 1), (2, 2)}

    def test_two_links(self):
        t = DelayTable(((0, 5), (3, 0)))
        cs = critical_sets_R(t)
        assert cs.network == {(0, 5), (1, 3)}
        assert cs.per_link[0] == {(0, 5), (1, 3)}

    def test_per_link_sets_equal_R_and_H(self):
        rng = np.random.default_rng(2)
        for _ in range(120):
            t = random_table(rng, rng.integers(3, 6))
            r = critical_sets_R(t)
            h = critical_sets_H(t)
            assert r.network == h.network
            for l in t.links:
                assert r.per_link[l] == h.per_link[l]

    def test_per_link_subset_invariant(self):
        with pytest.raises(ValueError):
            CriticalSets(frozenset({(0, 1)}), {0: frozenset({(0, 2)})})


class TestComplexity:
    def test_example_counts_R(self):
        assert complexity_threshold_vectors(EXAMPLE2, 2, "R") == BigPower(3, 56)
        assert complexity_sample_paths(EXAMPLE2, 2, "R") == BigPower(2, 36)

    def test_example_counts_H(self):
        assert complexity_threshold_vectors(EXAMPLE2, 2, "H") == BigPower(3, 14)
        assert complexity_sample_paths(EXAMPLE2, 2, "H") == BigPower(2, 32)

    def test_zero_delay_paths(self):
        t = DelayTable(((0, 0), (0, 0)))
        assert complexity_sample_paths(t, 2, "R") == 1

    def test_worst_case_closed_form_matches_general(self):
        rng = np.random.default_rng(3)
        for n in (3, 4):
            while True:
                t = random_table(rng, n, hi=40)
                off = [t.delays[i][j] for i in range(n) for j in range(n) if i != j]
                if len(set(off)) == len(off):
                    break
            arranged = worst_case_rearrange(t)
            for policy in ("R", "H"):
                assert complexity_threshold_vectors(
                    arranged, 2, policy
                ) == worst_case_threshold_vectors(n, 2, policy)

    def test_H_at_most_R_on_worst_case_tables(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(3, 6))
            while True:
                t = random_table(rng, n, hi=60)
                off = [t.delays[i][j] for i in range(n) for j in range(n) if i != j]
                if len(set(off)) == len(off):
                    break
            arranged = worst_case_rearrange(t)
            h = complexity_threshold_vectors(arranged, 2, "H")
            r = complexity_threshold_vectors(arranged, 2, "R")
            assert h <= r


class TestWorstCaseRearrange:
    def test_example_table_is_fixed_point(self):
        assert worst_case_rearrange(EXAMPLE2).delays == EXAMPLE2.delays

    def test_row_sort_semantics(self):
        t = DelayTable(((0, 3, 1, 2), (4, 0, 9, 8), (5, 6, 0, 7), (10, 11, 12, 0)))
        out = worst_case_rearrange(t)
        assert out.delays[0] == (0, 3, 2, 1)
        assert out.delays[1] == (9, 0, 8, 4)

    def test_requires_distinct(self):
        with pytest.raises(NonDistinctDelays):
            worst_case_rearrange(TABLE1)  # contains duplicate delays

    def test_md_rearranged_is_example_table(self):
        md = DelayTable(((0, 7, 11), (8, 0, 9), (12, 6, 0)))
        assert worst_case_rearrange(md).delays == EXAMPLE2.delays


class TestBigPower:
    def test_exact_values(self):
        assert BigPower(3, 56).value() == 3**56
        assert BigPower(2, 0) == 1

    def test_cross_base_equality(self):
        assert BigPower(4, 24) == BigPower(2, 48)
        assert BigPower(9, 7) == BigPower(3, 14)
        assert BigPower(2, 10) != BigPower(3, 10)

    def test_ordering(self):
        assert BigPower(3, 14) < BigPower(3, 56)
        assert BigPower(2, 1_000_000) > BigPower(3, 500_000)  # 6.02e5 vs 2.38e5 digits
        assert BigPower(2, 40) > 1e9
        assert not BigPower(2, 20) > 1e9

    def test_huge_equality_via_factorisation(self):
        assert BigPower(4, 100_000) == BigPower(2, 200_000)
        assert BigPower(6, 100_000) != BigPower(2, 100_000)

    def test_conditioning_pairs(self):
        assert conditioning_pairs(TABLE1, "R") == {(0, 4), (1, 4), (2, 4)}
        assert conditioning_pairs(TABLE1, "H") == {(0, 3), (1, 4), (2, 2)}
