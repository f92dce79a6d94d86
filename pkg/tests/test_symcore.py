import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from wishlocal.symcore import (
    SpdMatrix,
    SymMatrix,
    halfvec_cov,
    halfvec_second_moment_weights,
    spd_inv_sqrt,
    sym_eigen,
    trace_power,
    unvecp,
    vecp,
)

from helpers import random_spd


class TestVecp:
    def test_two_by_two(self):
        assert_allclose(vecp(SymMatrix([[1, 2], [2, 3]])), [1, 2, 3])

    def test_identity(self):
        assert_allclose(vecp(np.eye(2)), [1, 0, 1])

    def test_three_by_three_column_major(self):
        M = [[4, 1, 0], [1, 5, 2], [0, 2, 6]]
        assert_allclose(vecp(SymMatrix(M)), [4, 1, 5, 0, 2, 6])

    def test_unvecp_examples(self):
        assert_allclose(unvecp([1, 2, 3]).mat, [[1, 2], [2, 3]])
        assert_allclose(unvecp([1, 0, 1]).mat, np.eye(2))
        assert_allclose(unvecp([4, 1, 5, 0, 2, 6]).mat, [[4, 1, 0], [1, 5, 2], [0, 2, 6]])

    def test_unvecp_rejects_non_triangular_length(self):
        with pytest.raises(ValueError, match="triangular"):
            unvecp([1.0, 2.0, 3.0, 4.0])

    @given(st.integers(1, 5), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_round_trip(self, d, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(d, d))
        M = SymMatrix(np.triu(a) + np.triu(a, 1).T)
        back = unvecp(vecp(M))
        assert np.array_equal(back.mat, M.mat)


class TestSymMatrixTypes:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            SymMatrix([[1.0, 2.0], [0.5, 3.0]])

    def test_mirrors_upper_triangle_exactly(self):
        M = SymMatrix([[1.0, 0.1 + 1e-12], [0.1, 2.0]])
        assert M.mat[0, 1] == M.mat[1, 0]

    def test_spd_rejects_indefinite(self):
        with pytest.raises(ValueError, match="positive definite"):
            SpdMatrix([[1.0, 2.0], [2.0, 1.0]])

    def test_spd_allows_small_boundary_eigenvalues(self):
        # bandwidth-scaled eigenvalues down to 1e-10 must construct
        SpdMatrix(np.diag([1e-10, 1.0]))

    def test_spd_rejects_below_floor(self):
        with pytest.raises(ValueError, match="positive definite"):
            SpdMatrix(np.diag([1e-14, 1.0]))


class TestEigen:
    def test_identity(self):
        dec = sym_eigen(np.eye(2))
        assert_allclose(dec.eigenvalues, [1.0, 1.0])
        assert_allclose(dec.eigenvectors @ dec.eigenvectors.T, np.eye(2), atol=1e-12)

    def test_two_by_two(self):
        dec = sym_eigen([[2.0, 1.0], [1.0, 2.0]])
        assert_allclose(dec.eigenvalues, [1.0, 3.0], atol=1e-12)

    def test_diagonal_sorted_ascending(self):
        dec = sym_eigen(np.diag([5.0, -3.0]))
        assert_allclose(dec.eigenvalues, [-3.0, 5.0])

    def test_reconstruction_and_orthogonality(self):
        rng = np.random.default_rng(3)
        for d in (1, 2, 3, 6):
            a = rng.normal(size=(d, d))
            M = np.triu(a) + np.triu(a, 1).T
            dec = sym_eigen(M)
            rec = dec.eigenvectors @ np.diag(dec.eigenvalues) @ dec.eigenvectors.T
            assert np.linalg.norm(rec - M) <= 1e-12 * max(np.linalg.norm(M), 1.0)
            assert np.abs(dec.eigenvectors.T @ dec.eigenvectors - np.eye(d)).max() <= 1e-12


class TestSpdInvSqrt:
    def test_identity(self):
        assert_allclose(spd_inv_sqrt(np.eye(3)).mat, np.eye(3), atol=1e-14)

    def test_diagonal(self):
        assert_allclose(spd_inv_sqrt(np.diag([4.0, 9.0])).mat, np.diag([0.5, 1.0 / 3.0]), atol=1e-14)

    def test_defining_property(self):
        rng = np.random.default_rng(5)
        for d in (1, 2, 3):
            S = random_spd(rng, d)
            R = spd_inv_sqrt(S).mat
            assert np.linalg.norm(R @ S @ R - np.eye(d)) <= 1e-10
            assert_allclose(R, R.T)

    def test_two_by_two_spectral_form(self):
        S = np.array([[2.0, 1.0], [1.0, 2.0]])
        R = spd_inv_sqrt(S).mat
        assert np.linalg.norm(R @ S @ R - np.eye(2)) <= 1e-12

    def test_rejects_non_spd(self):
        with pytest.raises(ValueError, match="positive definite"):
            spd_inv_sqrt(np.diag([1.0, -1.0]))


class TestTracePower:
    def test_identity_cubed(self):
        assert trace_power(np.eye(2), 3) == pytest.approx(2.0)

    def test_two_by_two_squared(self):
        assert trace_power([[2.0, 1.0], [1.0, 2.0]], 2) == pytest.approx(10.0)

    def test_odd_power_of_symmetric_spectrum(self):
        assert trace_power([[0.0, 1.0], [1.0, 0.0]], 3) == pytest.approx(0.0, abs=1e-14)

    def test_k_one_equals_trace(self):
        rng = np.random.default_rng(11)
        for d in (1, 3, 5):
            S = random_spd(rng, d)
            assert trace_power(S, 1) == pytest.approx(np.trace(S), rel=1e-12)

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            trace_power(np.eye(2), 0)


class TestHalfvecCov:
    def test_identity_d2_unit_nu_entries(self):
        # nu = 1 sits outside the admissible dof range at d = 2 (the covariance
        # reading needs nu > d - 1), so the per-nu entry pattern diag(2, 1, 2)
        # is exposed through the nu-free weight factor.
        assert_allclose(halfvec_second_moment_weights(np.eye(2)), np.diag([2.0, 1.0, 2.0]))
        assert_allclose(halfvec_cov(10.0, np.eye(2)), np.diag([20.0, 10.0, 20.0]))

    def test_d1_chi_square_variance(self):
        for nu, s in ((3.0, 0.5), (10.0, 2.0)):
            assert_allclose(halfvec_cov(nu, [[s]]), [[2.0 * nu * s * s]])

    def test_determinant_identity(self):
        rng = np.random.default_rng(7)
        for d in (1, 2, 3):
            S = random_spd(rng, d)
            for nu in (5.0, 50.0):
                C = halfvec_cov(nu, S)
                A = np.sqrt(2.0 * nu) * S
                expected = 2.0 ** (-d * (d - 1) / 2.0) * np.linalg.det(A) ** (d + 1)
                assert np.linalg.det(C) == pytest.approx(expected, rel=1e-9)

    def test_symmetric_psd(self):
        rng = np.random.default_rng(9)
        for d in (2, 3, 4):
            C = halfvec_cov(7.0, random_spd(rng, d))
            assert_allclose(C, C.T)
            w = np.linalg.eigvalsh(C)
            assert w[0] >= -1e-10 * w[-1]

    def test_rejects_small_nu(self):
        with pytest.raises(ValueError, match="nu > d - 1"):
            halfvec_cov(1.0, np.eye(3))

    def test_weights_are_nu_free_factor(self):
        rng = np.random.default_rng(13)
        S = random_spd(rng, 3)
        assert_allclose(halfvec_cov(7.0, S), 7.0 * halfvec_second_moment_weights(S))
