import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holorecon.indices import (
    IndexSet,
    MultiIndex,
    Permutation,
    enumerate_lower_sets,
    hyperbolic_cross,
    is_anchored,
    is_lower,
    minimal_anchored_majorant,
    minimal_monotone_majorant,
    weighted_cardinality,
)
from holorecon.jacobi import JacobiParams, eval_tensor, intrinsic_weight

E = MultiIndex.unit
Z = MultiIndex.zero()
dense = st.lists(st.integers(0, 3), min_size=1, max_size=5)


def hc_brute(n):
    out = set()
    for v in itertools.product(range(n), repeat=n):
        if np.prod([x + 1 for x in v]) <= n:
            out.add(MultiIndex.from_dense(v))
    return out


class TestMultiIndex:
    @given(dense)
    def test_canonical(self, v):
        nu = MultiIndex.from_dense(v)
        assert nu == MultiIndex.from_dense(list(v) + [0, 0])
        assert all(e > 0 for _, e in nu.items())
        assert MultiIndex.from_token(nu.to_token()) == nu

    def test_zero_token(self):
        assert Z.to_token() == "0"
        assert E(2, 3).to_token() == "2:3"

    def test_index_set_order(self):
        S = IndexSet([E(1, 2), Z, E(2), E(1)])
        assert [nu.degree for nu in S] == sorted(nu.degree for nu in S)
        assert S[0] == Z
        assert IndexSet.from_text(S.to_text()) == S


class TestHyperbolicCross:
    def test_examples(self):
        assert list(hyperbolic_cross(1)) == [Z]
        assert set(hyperbolic_cross(2)) == {Z, E(1), E(2)}
        assert set(hyperbolic_cross(3)) == {Z, E(1), E(2), E(3), E(1, 2), E(2, 2), E(3, 2)}

    @pytest.mark.parametrize("n", [4, 5, 6])
    def test_brute_force(self, n):
        assert set(hyperbolic_cross(n)) == hc_brute(n)

    def test_anchored_up_to_64(self):
        # the full cross outgrows memory past n ~ 37; larger orders use 8 dims
        for n in range(1, 31):
            assert is_anchored(hyperbolic_cross(n))
        for n in range(31, 65):
            assert is_anchored(hyperbolic_cross(n, max_dim=8))

    def test_cap(self):
        with pytest.raises(MemoryError):
            hyperbolic_cross(200, cap=1000)

    def test_max_dim(self):
        H = hyperbolic_cross(8, max_dim=2)
        assert H.max_dim == 2 and is_anchored(H)


class TestPredicates:
    def test_lower(self):
        assert is_lower([Z])
        assert is_lower([Z, E(1), E(1, 2)])
        assert not is_lower([E(1)])

    def test_anchored(self):
        assert is_anchored([Z, E(1), E(2)])
        assert not is_anchored([Z, E(2)])
        assert is_anchored([Z, E(1), E(2), MultiIndex.from_dense((1, 1))])

    def test_enumeration_counts(self):
        # lower sets in a 1-D box are the prefixes
        assert len(enumerate_lower_sets((4,), 5)) == 5
        sets = enumerate_lower_sets((2, 2), 4)
        assert all(is_lower(S) for S in sets)


class TestMajorants:
    def test_monotone_examples(self):
        assert list(minimal_monotone_majorant([1, 3, 2, 0, 0])) == [3, 3, 2, 0, 0]
        assert list(minimal_monotone_majorant([4, 2, 1])) == [4, 2, 1]
        assert list(minimal_monotone_majorant([0, 0, 5, 0])) == [5, 5, 5, 0]

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
    def test_monotone_properties(self, z):
        m = minimal_monotone_majorant(z)
        assert np.all(m >= np.abs(z))
        assert np.all(np.diff(m) <= 0)
        assert np.array_equal(minimal_monotone_majorant(m), m)

    def test_anchored_examples(self):
        L = IndexSet([Z, E(1), E(2)])
        assert list(minimal_anchored_majorant(IndexSet([Z, E(1)]), [1.0, 0.0])) == [1.0, 0.0]
        vals = np.zeros(3)
        vals[L.position(E(1))], vals[L.position(E(2))] = 0.1, 0.9
        assert list(minimal_anchored_majorant(L, vals)) == pytest.approx([0.9, 0.9, 0.9])
        with pytest.raises(ValueError):
            minimal_anchored_majorant(IndexSet([E(1)]), [1.0])

    @settings(max_examples=50)
    @given(st.integers(0, 2**31 - 1))
    def test_anchored_properties(self, seed):
        rng = np.random.default_rng(seed)
        L = hyperbolic_cross(6, max_dim=3)
        vals = rng.exponential(1.0, len(L)) ** 3
        maj = minimal_anchored_majorant(L, vals)
        assert np.all(maj >= vals - 1e-15)
        for i, nu in enumerate(L):
            for mu in nu.lower_neighbors():
                assert maj[L.position(mu)] >= maj[i]
            j = nu.unit_dim()
            if j is not None and j > 1:
                assert maj[L.position(E(j - 1))] >= maj[i]
        assert np.array_equal(minimal_anchored_majorant(L, maj), maj)
        # any anchored majorant built by hand dominates it
        assert np.all(np.full(len(L), vals.max()) >= maj)


class TestWeightedCardinality:
    def test_examples(self):
        leg = JacobiParams.legendre()
        cheb = JacobiParams.chebyshev()
        assert weighted_cardinality([Z], lambda nu: 1.0) == 1.0
        assert weighted_cardinality([Z, E(1)], lambda nu: intrinsic_weight(leg, nu)) == pytest.approx(4)
        S = [Z, E(1), MultiIndex.from_dense((1, 1))]
        assert weighted_cardinality(S, lambda nu: intrinsic_weight(cheb, nu)) == pytest.approx(7)

    def test_unit_weights(self):
        H = hyperbolic_cross(9)
        assert weighted_cardinality(H) == len(H)


class TestPermutation:
    def test_examples(self):
        nu = MultiIndex.from_dense((2, 0, 1))
        assert Permutation.identity().apply_index(nu) == nu
        assert Permutation.swap(1, 2).apply_index(E(1)) == E(2)

    @settings(max_examples=50)
    @given(dense, st.permutations([1, 2, 3, 4, 5]), st.integers(0, 2**31 - 1))
    def test_tensor_identity(self, v, images, seed):
        pi = Permutation.from_images(images)
        P = JacobiParams((0.5, -0.25, 1.0, 0.0, 2.0), (0.0, 0.5, -0.5, 1.0, 0.3))
        nu = MultiIndex.from_dense(v)
        y = np.random.default_rng(seed).uniform(-1, 1, 5)
        lhs = eval_tensor(P, pi.apply_index(nu), y)
        rhs = eval_tensor(pi.apply_params(P), nu, pi.apply_points(y))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_inverse(self):
        pi = Permutation.from_images([3, 1, 2])
        nu = MultiIndex.from_dense((1, 2, 3))
        assert pi.inverse().apply_index(pi.apply_index(nu)) == nu
