import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkpd.errors import ShapeError
from gkpd.tensor import fold, frobenius_norm, kron, merge_index, split_index, unfold

from oracles import frobenius_scalar, kron_scalar, patches_by_slicing


class TestKron:
    def test_matrix_block_expansion(self):
        a = [[1, 2], [3, 4]]
        b = [[0, 1], [1, 0]]
        expected = [[0, 1, 0, 2], [1, 0, 2, 0], [0, 3, 0, 4], [3, 0, 4, 0]]
        np.testing.assert_array_equal(kron(a, b), expected)

    def test_unit_factor_is_identity(self):
        b = np.random.default_rng(0).standard_normal((2, 3, 4))
        one = np.ones((1, 1, 1))
        np.testing.assert_array_equal(kron(one, b), b)
        np.testing.assert_array_equal(kron(b, one), b)

    def test_matches_index_definition_3d(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((2, 3, 2))
        b = rng.standard_normal((3, 2, 2))
        np.testing.assert_array_equal(kron(a, b), kron_scalar(a, b))

    def test_matches_numpy_for_matrices(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal((3, 2)), rng.standard_normal((2, 5))
        np.testing.assert_allclose(kron(a, b), np.kron(a, b), rtol=0, atol=0)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            kron(np.ones((2, 2)), np.ones((2, 2, 2)))

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(1, 5).flatmap(
            lambda n: st.tuples(
                st.lists(st.integers(1, 3), min_size=n, max_size=n),
                st.lists(st.integers(1, 3), min_size=n, max_size=n),
                st.integers(0, 2**31),
            )
        )
    )
    def test_randomized_shapes(self, args):
        sa, sb, seed = args
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal(sa), rng.standard_normal(sb)
        k = kron(a, b)
        assert k.shape == tuple(p * q for p, q in zip(sa, sb))
        np.testing.assert_array_equal(k, kron_scalar(a, b))
        np.testing.assert_allclose(
            frobenius_norm(k), frobenius_norm(a) * frobenius_norm(b), rtol=1e-12
        )


class TestSplitIndex:
    def test_values(self):
        assert split_index(5, 3) == (1, 2)
        for b in range(1, 7):
            assert split_index(0, b) == (0, 0)

    def test_exhaustive_round_trip(self):
        for b in range(1, 7):
            for i in range(36):
                j, k = split_index(i, b)
                assert 0 <= k < b
                assert merge_index(j, k, b) == i

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            split_index(-1, 2)


class TestUnfold:
    def test_2d(self):
        w = np.arange(16.0).reshape(4, 4)
        p = unfold(w, (2, 2))
        assert p.shape == (4, 2, 2)
        np.testing.assert_array_equal(p[0], w[0:2, 0:2])
        np.testing.assert_array_equal(p[1], w[0:2, 2:4])

    def test_whole_tensor_is_single_patch(self):
        w = np.random.default_rng(0).standard_normal((3, 2, 4))
        p = unfold(w, w.shape)
        assert p.shape == (1, 3, 2, 4)
        np.testing.assert_array_equal(p[0], w)

    def test_3d_against_slicing(self):
        w = np.random.default_rng(3).standard_normal((6, 4, 2))
        p = unfold(w, (3, 2, 1))
        assert p.shape == (8, 3, 2, 1)
        np.testing.assert_array_equal(p, patches_by_slicing(w, (3, 2, 1)))

    def test_non_divisible(self):
        with pytest.raises(ShapeError, match="dimension 1"):
            unfold(np.ones((4, 5)), (2, 2))

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3)), min_size=1, max_size=4),
        st.integers(0, 2**31),
    )
    def test_fold_round_trip_is_exact(self, dims, seed):
        d = tuple(p for p, _ in dims)
        shape = tuple(p * g for p, g in dims)
        w = np.random.default_rng(seed).standard_normal(shape)
        patches = unfold(w, d)
        np.testing.assert_array_equal(patches, patches_by_slicing(w, d))
        assert np.array_equal(fold(patches, shape), w)


class TestFrobenius:
    def test_values(self):
        assert frobenius_norm([[3.0, 4.0]]) == 5.0
        assert frobenius_norm(np.zeros((3, 3))) == 0.0

    def test_matches_loop(self):
        w = np.random.default_rng(4).standard_normal((5, 4, 3))
        np.testing.assert_allclose(frobenius_norm(w), frobenius_scalar(w), rtol=1e-12)

    def test_extreme_scales(self):
        assert frobenius_norm([3e200, 4e200]) == pytest.approx(5e200)
        assert frobenius_norm([3e-200, 4e-200]) == pytest.approx(5e-200)
