import numpy as np
import pytest
from numpy.testing import assert_allclose

from wishlocal.densities import SmnParams, WishartParams, wishart_logpdf_batch
from wishlocal.sampling import (
    RngStream,
    RunningMoments,
    delta_trace_powers_batch,
    density_sup_bound,
    mc_trace_moment,
    moment_bound_on_event,
    sample_smn,
    sample_smn_batch,
    sample_wishart,
    sample_wishart_batch,
    trace_moment_exact,
    vecp_batch,
)
from wishlocal.symcore import SpdMatrix, halfvec_cov

from helpers import delta_eigs_batch, empirical_vecp_cov_z, random_spd


class TestRngStream:
    def test_same_stream_same_draw(self):
        p = WishartParams(7.0, SpdMatrix(random_spd(np.random.default_rng(0), 2)))
        a = sample_wishart(p, RngStream(123, 5))
        b = sample_wishart(p, RngStream(123, 5))
        assert np.array_equal(a.mat, b.mat)

    def test_distinct_streams_differ(self):
        p = WishartParams(7.0, SpdMatrix(np.eye(2)))
        a = sample_wishart(p, RngStream(123, 0))
        b = sample_wishart(p, RngStream(123, 1))
        assert not np.array_equal(a.mat, b.mat)

    def test_output_is_spd(self):
        p = WishartParams(2.5, SpdMatrix(random_spd(np.random.default_rng(1), 3)))
        X = sample_wishart_batch(p, np.random.default_rng(2), 500)
        assert np.linalg.eigvalsh(X)[:, 0].min() > 0


class TestWishartMoments:
    def test_d1_gamma_mean(self):
        nu, s, n = 5.0, 2.0, 200_000
        p = WishartParams(nu, SpdMatrix([[s]]))
        x = sample_wishart_batch(p, np.random.default_rng(3), n)[:, 0, 0]
        se = x.std(ddof=1) / np.sqrt(n)
        assert x.mean() == pytest.approx(nu * s, abs=3 * se)

    def test_vecp_covariance_matches_theory(self):
        _, theory, z = empirical_vecp_cov_z(10.0, np.eye(2), 200_000, seed=40)
        assert_allclose(theory, np.diag([20.0, 10.0, 20.0]))
        assert np.abs(z).max() <= 3.0

    def test_vecp_mean(self):
        nu, n = 10.0, 200_000
        S = random_spd(np.random.default_rng(5), 2)
        p = WishartParams(nu, SpdMatrix(S))
        v = vecp_batch(sample_wishart_batch(p, np.random.default_rng(6), n))
        se = v.std(axis=0, ddof=1) / np.sqrt(n)
        target = nu * vecp_batch(S[None])[0]
        assert np.all(np.abs(v.mean(axis=0) - target) <= 3 * se)


class TestSmnSampler:
    def test_mean_and_covariance(self):
        nu, n = 10.0, 200_000
        q = SmnParams(nu, SpdMatrix(np.eye(2)))
        X = sample_smn_batch(q, np.random.default_rng(7), n)
        v = vecp_batch(X)
        se = v.std(axis=0, ddof=1) / np.sqrt(n)
        assert np.all(np.abs(v.mean(axis=0) - np.array([10.0, 0.0, 10.0])) <= 3 * se)
        u = v - v.mean(axis=0)
        emp = (u.T @ u) / (n - 1)
        theory = halfvec_cov(nu, np.eye(2))
        prod_se = (u[:, :, None] * u[:, None, :]).std(axis=0, ddof=1) / np.sqrt(n)
        assert np.all(np.abs(emp - theory) <= 3 * prod_se)

    def test_single_draw_symmetric(self):
        q = SmnParams(4.0, SpdMatrix(random_spd(np.random.default_rng(8), 3)))
        X = sample_smn(q, RngStream(9, 0))
        assert_allclose(X, X.T)

    def test_standardized_scatter_limit(self):
        # sum of n Gaussian outer products is Wishart(n, S); its standardized
        # fluctuation has vecp covariance equal to the unit-dof weight matrix
        n_inner, reps = 10_000, 100_000
        S = np.array([[1.0, 0.3], [0.3, 0.7]])
        p = WishartParams(float(n_inner), SpdMatrix(S))
        W = sample_wishart_batch(p, np.random.default_rng(10), reps)
        F = (W - n_inner * S) / np.sqrt(n_inner)
        v = vecp_batch(F)
        u = v - v.mean(axis=0)
        emp = (u.T @ u) / (reps - 1)
        theory = halfvec_cov(1.0 + 1e-12, S) / (1.0 + 1e-12)  # 2 B^T (S x S) B entries
        prod_se = (u[:, :, None] * u[:, None, :]).std(axis=0, ddof=1) / np.sqrt(reps)
        assert np.all(np.abs(emp - theory) <= 3 * prod_se)


class TestTraceMomentExact:
    def test_d2_second_moment(self):
        assert trace_moment_exact(2, 37.0, 2) == pytest.approx(3.0)

    def test_d2_third_moment_nu50(self):
        assert trace_moment_exact(2, 50.0, 3) == pytest.approx(1.4, rel=1e-14)

    def test_d2_fourth_moment_nu50(self):
        assert trace_moment_exact(2, 50.0, 4) == pytest.approx(12.44, rel=1e-14)

    def test_unsupported_power(self):
        with pytest.raises(ValueError, match="closed forms"):
            trace_moment_exact(2, 50.0, 5)

    def test_dof_domain(self):
        with pytest.raises(ValueError, match="nu > d - 1"):
            trace_moment_exact(3, 1.5, 2)


class TestMcTraceMoment:
    def test_first_moment_vanishes(self):
        p = WishartParams(50.0, SpdMatrix(np.eye(2)))
        rep = mc_trace_moment(p, 1, 300_000, RngStream(11, 0))
        assert abs(rep.z) <= 3.0

    def test_scale_invariance_of_moment(self):
        p = WishartParams(50.0, SpdMatrix([[2.0, 1.0], [1.0, 3.0]]))
        rep = mc_trace_moment(p, 2, 300_000, RngStream(12, 0))
        assert rep.exact == pytest.approx(3.0)
        assert abs(rep.z) <= 3.0

    def test_d3_third_moment(self):
        p = WishartParams(40.0, SpdMatrix(np.eye(3)))
        rep = mc_trace_moment(p, 3, 400_000, RngStream(13, 0))
        assert rep.exact == pytest.approx(3.689512, rel=1e-6)
        assert abs(rep.z) <= 3.0

    def test_requires_minimum_sample(self):
        p = WishartParams(10.0, SpdMatrix(np.eye(2)))
        with pytest.raises(ValueError, match="n >= 1000"):
            mc_trace_moment(p, 2, 100, RngStream(14, 0))

    def test_closed_form_grid_agreement(self):
        # exact trace moments against n = 1e6 Monte Carlo on the (d, nu) grid
        n = 1_000_000
        for d, seed in ((1, 21), (2, 22), (3, 23)):
            for nu in (20.0, 50.0, 200.0):
                S = SpdMatrix(np.eye(d))
                p = WishartParams(nu, S)
                X = sample_wishart_batch(p, np.random.default_rng(seed + int(nu)), n)
                t = delta_trace_powers_batch(p, X)
                for k in (1, 2, 3, 4):
                    vals = t[k - 1]
                    se = vals.std(ddof=1) / np.sqrt(n)
                    exact = trace_moment_exact(d, nu, k)
                    assert vals.mean() == pytest.approx(exact, abs=3 * se), (d, nu, k)

    def test_similarity_invariance(self):
        nu, n = 30.0, 300_000
        S1, S2 = np.eye(2), np.array([[2.0, 1.0], [1.0, 3.0]])
        for k in (1, 2, 3, 4):
            reps = []
            for i, S in enumerate((S1, S2)):
                p = WishartParams(nu, SpdMatrix(S))
                reps.append(mc_trace_moment(p, k, n, RngStream(31 + i, k)))
            gap = abs(reps[0].mc_estimate - reps[1].mc_estimate)
            combined = np.hypot(reps[0].mc_stderr, reps[1].mc_stderr)
            assert gap <= 3 * combined

    def test_worker_count_independent(self, monkeypatch):
        p = WishartParams(25.0, SpdMatrix(np.eye(2)))
        monkeypatch.setenv("WSL_THREADS", "1")
        a = mc_trace_moment(p, 2, 50_000, RngStream(15, 0))
        monkeypatch.setenv("WSL_THREADS", "4")
        b = mc_trace_moment(p, 2, 50_000, RngStream(15, 0))
        assert a == b


class TestRunningMoments:
    def test_merge_matches_batch(self):
        rng = np.random.default_rng(16)
        x = rng.normal(size=1000)
        parts = np.array_split(x, 7)
        acc = RunningMoments()
        for part in parts:
            acc = acc.merge(RunningMoments.from_values(part))
        assert acc.count == 1000
        assert acc.mean == pytest.approx(x.mean(), rel=1e-12)
        assert acc.m2 == pytest.approx(np.sum((x - x.mean()) ** 2), rel=1e-10)


class TestMomentBoundOnEvent:
    def test_zero_complement(self):
        assert moment_bound_on_event(2, 100.0, 1, 0.0) == 0.0
        assert moment_bound_on_event(2, 100.0, 3, 0.0) == 0.0

    def test_formula_values(self):
        assert moment_bound_on_event(2, 100.0, 1, 1e-4) == pytest.approx(
            2.0**1.5 * 1e-2, rel=1e-12
        )
        assert moment_bound_on_event(3, 100.0, 3, 1e-4) == pytest.approx(
            3.0 * 3.0**2.5 * 1e-1, rel=1e-12
        )

    def test_low_nu_warns(self):
        with pytest.warns(RuntimeWarning, match="asymptotic regime"):
            moment_bound_on_event(2, 5.0, 1, 0.5)

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            moment_bound_on_event(2, 100.0, 1, 1.5)

    def test_unsupported_power(self):
        with pytest.raises(ValueError):
            moment_bound_on_event(2, 100.0, 2, 0.5)

    def test_restricted_mean_within_bound(self):
        # event {max |lambda| <= t} with complement probability near 1e-3
        nu, d, n = 100.0, 2, 200_000
        p = WishartParams(nu, SpdMatrix(np.eye(d)))
        X = sample_wishart_batch(p, np.random.default_rng(17), n)
        lam = delta_eigs_batch(nu, np.eye(d), X)
        m = np.abs(lam).max(axis=1)
        t = np.quantile(m, 0.999)
        inside = m <= t
        p_hat = 1.0 - inside.mean()
        tr1 = lam.sum(axis=1)
        restricted = (tr1 * inside).mean()
        se = (tr1 * inside).std(ddof=1) / np.sqrt(n)
        assert abs(restricted) <= moment_bound_on_event(d, nu, 1, p_hat) + 3 * se


class TestDensitySupBound:
    def test_scalar_example(self):
        bound = density_sup_bound(4.0, [[1.0]])
        expected = (2 * np.pi / np.e) ** -0.5 / ((2 * np.e) ** 0.5 * (4.0 - 2.0) ** 0.5)
        assert bound == pytest.approx(expected, rel=1e-12)
        # Gamma(shape 2, scale 2) mode value sits below the bound
        mode_val = np.exp(-1.0) / 2.0
        assert mode_val <= bound

    def test_determinant_scaling(self):
        b1 = density_sup_bound(10.0, np.eye(2))
        b2 = density_sup_bound(10.0, 2.0 * np.eye(2))
        assert b1 / b2 == pytest.approx(8.0, rel=1e-12)

    def test_never_violated_on_random_probes(self):
        nu, d, n = 10.0, 2, 100_000
        M = random_spd(np.random.default_rng(18), d)
        p = WishartParams(nu, SpdMatrix(M))
        bound = density_sup_bound(nu, M)
        X = sample_wishart_batch(p, np.random.default_rng(19), n)
        vals = np.exp(wishart_logpdf_batch(nu, M, X))
        assert vals.max() <= bound
        # the mode value itself respects the bound
        mode = (nu - (d + 1)) * M
        assert np.exp(wishart_logpdf_batch(nu, M, mode[None])[0]) <= bound

    def test_domain(self):
        with pytest.raises(ValueError, match="nu > d"):
            density_sup_bound(3.0, np.eye(2))
