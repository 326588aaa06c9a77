"""Core volume math: examples, invariants, and gradient correctness."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import gramvol as gv
from gramvol.errors import (
    DimensionMismatchError,
    EmptyInputError,
    NonFiniteInputError,
    ZeroVectorError,
)
from gramvol.volume import DEGENERATE_VOLUME, psd_det

from conftest import central_diff, cofactor_det, random_orthogonal, rel_err, unit_rows


class TestNormalize:
    def test_scales_to_unit(self):
        np.testing.assert_allclose(gv.normalize([3.0, 4.0]), [0.6, 0.8], rtol=0, atol=1e-15)

    def test_identity_on_unit_vector(self):
        np.testing.assert_array_equal(gv.normalize([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVectorError):
            gv.normalize([0.0, 0.0])

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteInputError):
            gv.normalize([1.0, float("nan")])

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (6,), elements=st.floats(-10, 10)))
    def test_unit_norm_and_direction(self, v):
        if np.linalg.norm(v) < 1e-6:
            return
        u = gv.normalize(v)
        assert abs(np.linalg.norm(u) - 1.0) < 1e-12
        np.testing.assert_allclose(u * np.linalg.norm(v), v, atol=1e-9)


class TestGramMatrix:
    def test_orthonormal_basis(self):
        e = np.eye(3)
        np.testing.assert_array_equal(gv.gram_matrix([e[0], e[1]]), np.eye(2))

    def test_repeated_vector(self):
        e1 = np.array([1.0, 0.0, 0.0])
        np.testing.assert_array_equal(gv.gram_matrix([e1, e1]), np.ones((2, 2)))

    def test_analytic_dot_product(self):
        s = math.sqrt(2.0) / 2.0
        g = gv.gram_matrix([np.array([1.0, 0.0]), np.array([s, s])])
        np.testing.assert_allclose(g, [[1.0, s], [s, 1.0]], atol=1e-15)

    def test_exact_symmetry_and_psd(self, rng):
        rows = rng.standard_normal((5, 9))
        g = gv.gram_matrix(rows)
        assert np.array_equal(g, g.T)
        assert np.linalg.eigvalsh(g).min() >= -1e-10

    def test_unit_diagonal_for_unit_inputs(self, rng):
        g = gv.gram_matrix(unit_rows(rng, 4, 7))
        np.testing.assert_allclose(np.diag(g), 1.0, atol=1e-12)

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            gv.gram_matrix([])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            gv.gram_matrix([np.zeros(3), np.zeros(4)])


class TestGramianVolume:
    def test_orthonormal_triple_in_r4(self):
        e = np.eye(4)
        vol = gv.gramian_volume([e[0], e[1], e[2]])
        assert vol.value == 1.0
        assert vol.gram_det == 1.0

    def test_sixty_degree_pair(self):
        v1 = np.array([1.0, 0.0])
        v2 = np.array([math.cos(math.pi / 3), math.sin(math.pi / 3)])
        assert abs(gv.gramian_volume([v1, v2]).value - math.sin(math.pi / 3)) < 1e-14

    def test_pairwise_half_triple(self):
        # Three unit vectors with all pairwise inner products 0.5; the
        # expected value comes from the cofactor-expansion oracle.
        g = np.full((3, 3), 0.5)
        np.fill_diagonal(g, 1.0)
        rows = np.linalg.cholesky(g)
        expected = math.sqrt(cofactor_det(g))
        assert abs(cofactor_det(g) - 0.5) < 1e-15
        assert abs(gv.gramian_volume(list(rows)).value - expected) < 1e-12

    def test_k_exceeding_n_is_zero(self):
        vol = gv.gramian_volume([np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                                 gv.normalize([1.0, 1.0])])
        assert vol.value == 0.0
        assert vol.gram_det == 0.0

    def test_single_vector_is_norm(self):
        assert abs(gv.gramian_volume([np.array([3.0, 4.0])]).value - 5.0) < 1e-12

    def test_value_is_sqrt_of_clamped_det(self, rng):
        vol = gv.gramian_volume(unit_rows(rng, 3, 5))
        assert vol.value == math.sqrt(max(vol.gram_det, 0.0))

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteInputError):
            gv.gramian_volume([np.array([1.0, np.inf])])

    def test_oracle_equivalence_sample(self, rng):
        for _ in range(100):
            k = int(rng.integers(1, 5))
            n = int(rng.integers(k, 7))
            rows = unit_rows(rng, k, n)
            det = cofactor_det(rows @ rows.T)
            assert abs(gv.gramian_volume(rows).value ** 2 - det) < 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2 ** 31 - 1))
    def test_permutation_invariance(self, k, seed):
        r = np.random.default_rng(seed)
        rows = unit_rows(r, k, 6)
        base = gv.gramian_volume(rows).value
        perm = r.permutation(k)
        assert gv.gramian_volume(rows[perm]).value == pytest.approx(base, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2 ** 31 - 1))
    def test_orthogonal_invariance(self, k, seed):
        r = np.random.default_rng(seed)
        rows = unit_rows(r, k, 6)
        o = random_orthogonal(r, 6)
        rotated = rows @ o.T
        assert abs(gv.gramian_volume(rotated).value - gv.gramian_volume(rows).value) < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2 ** 31 - 1))
    def test_monotone_degeneracy(self, k, seed):
        r = np.random.default_rng(seed)
        rows = unit_rows(r, k, 8)
        rows[1] = rows[0]
        assert gv.gramian_volume(rows).value < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
    def test_hadamard_bound_for_unit_inputs(self, k, seed):
        rows = unit_rows(np.random.default_rng(seed), k, 8)
        v = gv.gramian_volume(rows).value
        assert 0.0 <= v <= 1.0 + 1e-12

    def test_sine_equivalence_for_pairs(self, rng):
        for _ in range(200):
            rows = unit_rows(rng, 2, 6)
            cos = float(rows[0] @ rows[1])
            assert abs(gv.gramian_volume(rows).value - math.sqrt(1.0 - cos ** 2)) < 1e-10


class TestPsdDet:
    def test_matches_cofactor_oracle(self, rng):
        for _ in range(50):
            rows = rng.standard_normal((4, 6))
            g = rows @ rows.T
            assert psd_det(g) == pytest.approx(cofactor_det(g), rel=1e-10, abs=1e-12)

    def test_rank_deficient_is_exact_zero(self):
        g = np.ones((3, 3))
        assert psd_det(g) == 0.0

    def test_indefinite_falls_back_to_clamped_eigenvalues(self):
        # Not a Gram matrix at all: eigenvalues are +1 and -1, and the
        # negative one must be clamped to zero.
        g = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert psd_det(g) == 0.0

    def test_large_k_numpy_path(self, rng):
        rows = rng.standard_normal((12, 20))
        g = rows @ rows.T
        expected = float(np.prod(np.linalg.eigvalsh(g)))
        assert psd_det(g) == pytest.approx(expected, rel=1e-8)


class TestVolumeGradient:
    def test_orthonormal_pair_matches_finite_differences(self):
        rows = np.eye(3)[:2].copy()
        grad = gv.volume_gradient(rows)
        fd = central_diff(lambda r: gv.gramian_volume(r).value, rows)
        assert not grad.degenerate
        assert rel_err(grad.grads, fd).max() < 1e-5
        np.testing.assert_allclose(grad.grads, rows, atol=1e-12)

    def test_identical_vectors_degenerate(self, rng):
        v = unit_rows(rng, 1, 5)[0]
        grad = gv.volume_gradient([v, v])
        assert grad.degenerate
        np.testing.assert_array_equal(grad.grads, np.zeros((2, 5)))

    def test_random_triple_matches_finite_differences(self, rng):
        rows = unit_rows(rng, 3, 5)
        grad = gv.volume_gradient(rows)
        fd = central_diff(lambda r: gv.gramian_volume(r).value, rows)
        assert rel_err(grad.grads, fd).max() < 1e-5

    def test_gradient_suite_random_configs(self, rng):
        checked = 0
        while checked < 100:
            k = int(rng.integers(2, 6))
            rows = unit_rows(rng, k, 16)
            vol = gv.gramian_volume(rows).value
            if vol <= 1e-3:
                continue
            grad = gv.volume_gradient(rows)
            fd = central_diff(lambda r: gv.gramian_volume(r).value, rows)
            mask = np.abs(fd) > 1e-8
            assert rel_err(grad.grads[mask], fd[mask]).max() < 1e-5
            checked += 1

    def test_k_above_n_degenerate(self, rng):
        rows = unit_rows(rng, 4, 3)
        grad = gv.volume_gradient(rows)
        assert grad.degenerate

    def test_threshold_exported(self):
        assert DEGENERATE_VOLUME == 1e-9
