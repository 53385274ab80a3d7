from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedrank.perm import (
    PermutationError,
    as_permutation,
    compose,
    identity,
    invert,
    kendall_tau,
    kendall_tau_many,
    lehmer_decode,
    lehmer_decode_batch,
    lehmer_encode,
    lehmer_encode_batch,
    partial_to_full,
    relabel_displacement,
    scores_to_ranking,
    spearman_footrule,
)


def perms(max_n=9):
    return st.integers(1, max_n).flatmap(lambda n: st.permutations(list(range(1, n + 1))))


def pair_of_perms(max_n=8):
    return st.integers(1, max_n).flatmap(
        lambda n: st.tuples(st.permutations(list(range(1, n + 1))), st.permutations(list(range(1, n + 1))))
    )


def brute_kendall(a, b):
    n = len(a)
    return sum((a[i] - a[j]) * (b[i] - b[j]) < 0 for i in range(n) for j in range(i + 1, n))


def brute_lehmer(p):
    return [sum(p[t] > p[i] for t in range(i)) for i in range(len(p))]


class TestValidation:
    @pytest.mark.parametrize("bad", [[1, 1, 3], [0, 1, 2], [1, 2, 4], [[1, 2], [2, 1]]])
    def test_rejects_non_permutations(self, bad):
        with pytest.raises(PermutationError):
            as_permutation(bad)

    def test_result_is_read_only(self):
        p = as_permutation([2, 1])
        with pytest.raises(ValueError):
            p[0] = 5

    def test_length_mismatch(self):
        with pytest.raises(PermutationError):
            kendall_tau([1, 2], [1, 2, 3])


class TestDistances:
    @pytest.mark.parametrize("a,b,expected", [
        ((1, 2, 3), (1, 2, 3), 0),
        ((2, 1), (1, 2), 1),
        ((1, 2, 3, 4), (4, 3, 2, 1), 6),
    ])
    def test_kendall_examples(self, a, b, expected):
        assert kendall_tau(a, b) == expected

    @pytest.mark.parametrize("a,b,expected", [
        ((1, 2, 3), (1, 2, 3), 0),
        ((1, 2), (2, 1), 2),
        ((1, 2, 3), (3, 1, 2), 4),
    ])
    def test_footrule_examples(self, a, b, expected):
        assert spearman_footrule(a, b) == expected

    @given(pair_of_perms())
    def test_kendall_matches_pair_count(self, ab):
        a, b = ab
        assert kendall_tau(a, b) == brute_kendall(a, b)

    @given(pair_of_perms())
    def test_diaconis_graham(self, ab):
        a, b = ab
        k = kendall_tau(a, b)
        assert k <= spearman_footrule(a, b) <= 2 * k

    def test_metric_axioms_on_s4(self):
        s4 = list(itertools.permutations(range(1, 5)))
        d = {(a, b): kendall_tau(a, b) for a in s4 for b in s4}
        for a in s4:
            for b in s4:
                assert d[a, b] == d[b, a]
                assert (d[a, b] == 0) == (a == b)
                for c in s4:
                    assert d[a, c] <= d[a, b] + d[b, c]

    def test_kendall_many_matches_single(self):
        rng = np.random.default_rng(3)
        cand = rng.permutation(9) + 1
        batch = np.array([rng.permutation(9) + 1 for _ in range(50)])
        got = kendall_tau_many(cand, batch, chunk=7)
        assert got.tolist() == [kendall_tau(cand, r) for r in batch]


class TestLehmer:
    def test_encode_examples(self):
        n = 6
        assert lehmer_encode(range(1, n + 1)).tolist() == [0] * n
        assert lehmer_encode(range(n, 0, -1)).tolist() == list(range(n))
        assert lehmer_encode([3, 1, 2]).tolist() == [0, 1, 1]

    def test_decode_examples(self):
        assert lehmer_decode([0, 0, 0]).tolist() == [1, 2, 3]
        assert lehmer_decode([0, 1, 2]).tolist() == [3, 2, 1]
        assert lehmer_decode([0, 1, 1]).tolist() == [3, 1, 2]

    @pytest.mark.parametrize("code", [[1, 0], [0, 2, 0], [0, -1]])
    def test_decode_rejects_out_of_range(self, code):
        with pytest.raises(PermutationError):
            lehmer_decode(code)

    @given(perms(12))
    def test_encode_matches_definition(self, p):
        assert lehmer_encode(p).tolist() == brute_lehmer(p)

    @given(perms(12))
    def test_roundtrip(self, p):
        assert lehmer_decode(lehmer_encode(p)).tolist() == list(p)

    @given(perms(9))
    def test_inversions_equal_code_sum(self, p):
        assert kendall_tau(p, identity(len(p))) == int(lehmer_encode(p).sum())

    @pytest.mark.parametrize("n", [1, 2, 5, 6])
    def test_batch_roundtrip_exhaustive(self, n):
        all_p = np.array(list(itertools.permutations(range(1, n + 1))))
        codes = lehmer_encode_batch(all_p)
        assert codes.tolist() == [brute_lehmer(p) for p in all_p.tolist()]
        assert np.array_equal(lehmer_decode_batch(codes), all_p)
        # the code is a bijection onto the mixed-radix box
        assert len({tuple(c) for c in codes.tolist()}) == len(all_p)


class TestGroupOps:
    def test_invert_examples(self):
        assert invert([1, 2, 3]).tolist() == [1, 2, 3]
        assert invert([2, 3, 1]).tolist() == [3, 1, 2]

    @given(perms())
    def test_invert_is_involution(self, p):
        p = np.array(p)
        assert invert(invert(p)).tolist() == p.tolist()
        assert compose(p, invert(p)).tolist() == identity(len(p)).tolist()

    @given(pair_of_perms())
    def test_kendall_right_invariant(self, ab):
        a, b = ab
        rng = np.random.default_rng(len(a))
        pi = rng.permutation(len(a)) + 1
        assert kendall_tau(compose(a, pi), compose(b, pi)) == kendall_tau(a, b)


class TestRelabel:
    @given(perms(7))
    def test_self_is_zero(self, p):
        assert relabel_displacement(p, p).tolist() == [0] * len(p)

    @given(perms(7))
    def test_identity_centroid_gives_code(self, p):
        assert relabel_displacement(p, identity(len(p))).tolist() == lehmer_encode(p).tolist()

    def test_small_case_by_definition(self):
        # relabel so the centroid becomes the identity, then count inversions
        sigma, sigma0 = [3, 1, 2], [2, 1, 3]
        relabeled = [None] * 3
        for item in range(3):
            relabeled[sigma0[item] - 1] = sigma[item]
        assert relabel_displacement(sigma, sigma0).tolist() == brute_lehmer(relabeled)
        assert relabel_displacement(sigma, sigma0).tolist() == [0, 0, 1]

    @given(pair_of_perms(7))
    def test_sum_is_kendall_distance(self, ab):
        a, b = ab
        assert int(relabel_displacement(a, b).sum()) == kendall_tau(a, b)


class TestScores:
    def test_examples(self):
        assert scores_to_ranking([9.0, 1.0, 5.0]).tolist() == [1, 3, 2]
        assert scores_to_ranking([2.0, 2.0, 1.0], "by_index").tolist() == [1, 2, 3]
        assert scores_to_ranking([4.0] * 5, "by_index").tolist() == [1, 2, 3, 4, 5]

    def test_seeded_random_ties_are_a_permutation(self):
        rng = np.random.default_rng(0)
        seen = {tuple(scores_to_ranking([1.0, 1.0], "seeded_random", rng)) for _ in range(50)}
        assert seen == {(1, 2), (2, 1)}


class TestPartialToFull:
    def test_full_prefix_unchanged(self):
        rng = np.random.default_rng(0)
        # prefix lists items best-first; item 2 first means item 2 has rank 1
        assert partial_to_full([2, 3, 1], 3, rng).tolist() == [3, 1, 2]

    def test_singleton_prefix_frequency(self):
        rng = np.random.default_rng(11)
        draws = np.array([partial_to_full([3], 3, rng) for _ in range(10_000)])
        assert (draws[:, 2] == 1).all()
        assert abs((draws[:, 0] == 2).mean() - 0.5) < 0.02

    def test_empty_prefix_uniform(self):
        rng = np.random.default_rng(5)
        draws = [tuple(partial_to_full([], 3, rng)) for _ in range(6000)]
        counts = np.array([draws.count(p) for p in itertools.permutations(range(1, 4))])
        assert (np.abs(counts / 6000 - 1 / 6) < 0.03).all()

    @pytest.mark.parametrize("prefix", [[4], [1, 1], [0]])
    def test_rejects_bad_prefix(self, prefix):
        with pytest.raises(PermutationError):
            partial_to_full(prefix, 3, np.random.default_rng(0))
