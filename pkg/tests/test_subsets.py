"""
Testes da enumeração revolving door e dos conjuntos de interação
"""
import itertools
from math import comb

import pytest

from mr2.exceptions import CapacityError, ParameterError
from mr2.subsets import complement, enumerate_family, partial_id_interactions


class TestEnumerateFamily:

    def test_singletons(self):
        fam = enumerate_family(3, 1)
        assert set(fam.members) == {(1,), (2,), (3,)}
        assert fam.members[0] == (1,)

    def test_five_choose_two(self):
        fam = enumerate_family(5, 2)
        assert len(fam) == 10
        assert fam.members[0] == (1, 2)
        for left, right in zip(fam.members, fam.members[1:]):
            assert len(set(left) ^ set(right)) == 2

    def test_full_set(self):
        fam = enumerate_family(4, 4)
        assert fam.members == ((1, 2, 3, 4),)

    @pytest.mark.parametrize("k_total", range(1, 13))
    def test_matches_brute_force_with_adjacency(self, k_total):
        for k_dagger in range(1, k_total + 1):
            fam = enumerate_family(k_total, k_dagger)
            brute = set(itertools.combinations(range(1, k_total + 1), k_dagger))
            assert len(fam) == comb(k_total, k_dagger)
            assert set(fam.members) == brute
            assert fam.members[0] == tuple(range(1, k_dagger + 1))
            for left, right in zip(fam.members, fam.members[1:]):
                assert len(set(left) ^ set(right)) == 2

    def test_labels(self):
        assert enumerate_family(3, 2).labels()[0] == "Z_1_2"

    @pytest.mark.parametrize("k_dagger", [0, 4])
    def test_out_of_range(self, k_dagger):
        with pytest.raises(ParameterError):
            enumerate_family(3, k_dagger)

    def test_capacity(self):
        with pytest.raises(CapacityError) as excinfo:
            enumerate_family(10, 5, cap=100)
        assert excinfo.value.size == 252


class TestPartialIdInteractions:

    def test_five_two(self):
        sets = partial_id_interactions(5, 2)
        assert len(sets) == 6
        assert sets[-1] == (1, 2, 3, 4, 5)
        assert all(len(s) == 4 for s in sets[:5])

    def test_three_one(self):
        assert partial_id_interactions(3, 1) == [(1, 2, 3)]

    def test_four_three(self):
        sets = partial_id_interactions(4, 3)
        assert len(sets) == 11
        assert [len(s) for s in sets] == [2] * 6 + [3] * 4 + [4]
        assert sets == sorted(sets, key=lambda s: (len(s), s))

    @pytest.mark.parametrize("k_total,k_dagger", [(6, 1), (6, 3), (7, 7)])
    def test_count(self, k_total, k_dagger):
        expected = sum(comb(k_total, order) for order in range(k_total - k_dagger + 1, k_total + 1))
        assert len(partial_id_interactions(k_total, k_dagger)) == expected


class TestComplement:

    def test_examples(self):
        assert complement((1, 2), 5) == (3, 4, 5)
        assert complement((1, 2, 3), 3) == ()
        assert complement((2,), 3) == (1, 3)

    def test_out_of_range(self):
        with pytest.raises(ParameterError):
            complement((0, 2), 3)
