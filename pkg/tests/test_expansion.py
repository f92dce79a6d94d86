import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from wishlocal.densities import (
    WishartParams,
    log_ratio_direct,
    log_ratio_stable,
    smn_logpdf,
    wishart_logpdf,
)
from wishlocal.expansion import (
    BulkSpec,
    ExpansionTerms,
    error_curve,
    expansion_terms,
    figure_eta,
    in_bulk,
    log_ratio_expansion,
    ratio_expansion,
    sup_error,
    sup_errors_all,
    transformed_ratio_expansion,
)
from wishlocal.symcore import SpdMatrix

from helpers import random_spd, reconstruct_from_spectrum, residual_slope


class TestInBulk:
    def test_zero_spectrum_always_inside(self):
        for nu in (5.0, 205.0):
            for eta in (0.1, 0.9):
                assert in_bulk(BulkSpec(eta=eta, nu=nu), np.zeros(3))

    def test_figure_eta_reduces_to_half_box(self):
        for nu in (10.0, 205.0):
            spec = BulkSpec(eta=figure_eta(nu), nu=nu)
            assert in_bulk(spec, [0.5, -0.5])
            assert not in_bulk(spec, [0.5000001, 0.0])

    def test_direct_arithmetic_case(self):
        spec = BulkSpec(eta=0.5, nu=64.0)
        # |sqrt(2/64) * 0.9| = 0.159 > 0.5 * 64^{-1/3} = 0.125
        assert not in_bulk(spec, [0.9, 0.0])

    def test_eta_validated(self):
        with pytest.raises(ValueError):
            BulkSpec(eta=1.5, nu=10.0)


class TestExpansionTerms:
    def test_zero_spectrum_d1(self):
        t = expansion_terms(1, 0.0, 0.0, 0.0, 0.0)
        assert t.t_half == 0.0
        assert t.t_one_log == pytest.approx(-1.0 / 6.0, rel=1e-15)

    def test_zero_spectrum_d2(self):
        t = expansion_terms(2, 0.0, 0.0, 0.0, 0.0)
        assert t.t_one_log == pytest.approx(-13.0 / 12.0, rel=1e-15)

    def test_off_diagonal_d2(self):
        # spectrum (-1, 1): tr1 = 0, tr2 = 2, tr3 = 0, tr4 = 2
        t = expansion_terms(2, 0.0, 2.0, 0.0, 2.0)
        assert t.t_half == 0.0
        assert t.t_one_log == pytest.approx(11.0 / 12.0, rel=1e-15)
        assert t.t_one_ratio == pytest.approx(11.0 / 12.0, rel=1e-15)

    def test_cross_check_against_stable_log_ratio(self):
        # residual is O(nu^{-3/2}) at fixed spectrum
        t = expansion_terms(2, 0.0, 2.0, 0.0, 2.0)
        nu = 1e4
        assert log_ratio_stable(nu, 2, [-1.0, 1.0]) == pytest.approx(
            log_ratio_expansion(nu, t), abs=1e-4
        )

    @given(st.integers(1, 4), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_ratio_minus_log_identity(self, d, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(d, d))
        w = np.linalg.eigvalsh(a + a.T)
        tr = [float(np.sum(w**k)) for k in range(1, 5)]
        t = expansion_terms(d, *tr)
        assert t.t_one_ratio - t.t_one_log == pytest.approx(
            0.5 * t.t_half**2, rel=1e-12, abs=1e-12
        )


class TestExpansionEvaluation:
    def test_zero_terms(self):
        t = ExpansionTerms(0.0, 0.0, 0.0)
        assert log_ratio_expansion(100.0, t) == 0.0
        assert ratio_expansion(100.0, t) == 1.0

    def test_d1_zero_spectrum_value(self):
        t = expansion_terms(1, 0.0, 0.0, 0.0, 0.0)
        assert log_ratio_expansion(100.0, t) == pytest.approx(-1.0 / 600.0, rel=1e-12)

    def test_d2_zero_spectrum_ratio(self):
        t = expansion_terms(2, 0.0, 0.0, 0.0, 0.0)
        assert ratio_expansion(100.0, t) == pytest.approx(1.0 - 13.0 / 1200.0, rel=1e-12)

    def test_residual_order_in_nu(self):
        for d in (1, 2, 3):
            slope = residual_slope(d, np.full(d, 0.5))
            assert slope <= -1.4

    def test_exp_of_log_form_matches_ratio_form_to_higher_order(self):
        lam = np.array([0.5, -0.25])
        tr = [float(np.sum(lam**k)) for k in range(1, 5)]
        t = expansion_terms(2, *tr)
        nus = np.array([100.0, 400.0, 1600.0])
        diffs = [abs(np.exp(log_ratio_expansion(nu, t)) - ratio_expansion(nu, t)) for nu in nus]
        slope = np.polyfit(np.log(nus), np.log(diffs), 1)[0]
        assert slope <= -1.4


class TestSupError:
    def test_dominates_zero_spectrum_point(self):
        nu, d = 100.0, 2
        e0 = sup_error(nu, d, 0, budget=400, seed=0)
        assert e0 >= abs(log_ratio_stable(nu, d, np.zeros(d)))

    def test_budget_stability(self):
        a = sup_errors_all(100.0, 2, budget=1_000, seed=0)
        b = sup_errors_all(100.0, 2, budget=10_000, seed=0)
        for x, y in zip(a, b):
            assert abs(x / y - 1.0) <= 0.02

    def test_order_monotonicity_large_nu(self):
        for nu in (50.0, 105.0, 205.0):
            e0, e1, e2 = sup_errors_all(nu, 2, budget=2_000, seed=0)
            assert e2 <= e1 <= e0

    def test_measured_exponents_at_right_edge(self):
        # measured values at nu = 205, d = 2; the order-0 exponent sits near
        # 1/2 - log(2)/log(nu) ~ 0.367 because the sup of the first-order
        # coefficient over the bulk box is about 2
        e0, e1, e2 = sup_errors_all(205.0, 2, budget=10_000, seed=0)
        exps = [np.log(e) / np.log(1.0 / 205.0) for e in (e0, e1, e2)]
        assert exps[0] == pytest.approx(0.3667, abs=0.01)
        assert exps[1] >= 0.9
        assert exps[2] >= 1.4

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            sup_error(50.0, 2, 3, budget=100, seed=0)

    def test_requires_nu_above_stable_domain(self):
        with pytest.raises(ValueError):
            sup_error(3.0, 2, 0, budget=100, seed=0)


class TestErrorCurve:
    def test_deterministic_rows(self):
        a = error_curve(2, [55.0, 105.0], budget=2_000, seed=42)
        b = error_curve(2, [55.0, 105.0], budget=2_000, seed=42)
        assert a == b

    def test_requires_ascending(self):
        with pytest.raises(ValueError, match="ascending"):
            error_curve(2, [50.0, 40.0], budget=100, seed=0)

    def test_inverse_errors_increase(self):
        curve = error_curve(2, list(np.arange(25.0, 206.0, 20.0)), budget=2_000, seed=0)
        for attr in ("E0", "E1", "E2"):
            vals = [getattr(r, attr) for r in curve.rows]
            violations = sum(1 for x, y in zip(vals, vals[1:]) if not 1.0 / y > 1.0 / x)
            assert violations <= 1

    def test_matrix_space_spot_check(self):
        # the eigenvalue-space sup value must match full-matrix evaluation for
        # any scale matrix (the objective is scale-free)
        nu, d = 105.0, 2
        lam = np.array([-0.5, -0.5])
        val_eig = abs(log_ratio_stable(nu, d, lam))
        rng = np.random.default_rng(17)
        for S in (np.eye(d), random_spd(rng, d)):
            X = reconstruct_from_spectrum(nu, S, lam)
            p = WishartParams(nu, SpdMatrix(S))
            val_mat = abs(wishart_logpdf(p, X) - smn_logpdf(__import__("wishlocal").SmnParams(nu, p.S), X))
            assert val_mat == pytest.approx(val_eig, abs=1e-8)


class TestTransformedRatio:
    def test_identity_map(self):
        nu = 80.0
        S = np.eye(2)
        y = 80.0 * np.eye(2) + 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]])
        got = transformed_ratio_expansion(nu, S, lambda v: v, y)
        from wishlocal.densities import delta_residual
        from wishlocal.expansion import terms_from_residual

        res = delta_residual(WishartParams(nu, SpdMatrix(S)), y)
        assert got == pytest.approx(ratio_expansion(nu, terms_from_residual(res)), rel=1e-12)

    def test_log_map_at_mean(self):
        nu, s = 100.0, 1.0
        got = transformed_ratio_expansion(
            nu, [[s]], lambda y: np.array([[np.exp(float(y))]]), np.log(nu * s)
        )
        t = expansion_terms(1, 0.0, 0.0, 0.0, 0.0)
        assert got == pytest.approx(ratio_expansion(nu, t), rel=1e-12)

    def test_log_map_against_explicit_jacobians(self):
        # 1-D change of variables: densities of log W and log N carry the same
        # jacobian e^y, so their ratio equals the untransformed ratio at e^y
        nu, s, x = 100.0, 1.0, 110.0
        y = np.log(x)
        p = WishartParams(nu, SpdMatrix([[s]]))
        f_logW = np.exp(wishart_logpdf(p, np.array([[x]]))) * x
        from wishlocal.densities import SmnParams

        f_logN = np.exp(smn_logpdf(SmnParams(nu, p.S), np.array([[x]]))) * x
        exact_ratio = f_logW / f_logN
        got = transformed_ratio_expansion(nu, [[s]], lambda v: np.array([[np.exp(float(v))]]), y)
        # two-term expansion against the exact transformed ratio
        assert got == pytest.approx(exact_ratio, abs=2e-3)
        # and the residual spectrum is (x - nu s)/sqrt(2 nu) = 10/sqrt(200)
        delta = (x - nu * s) / np.sqrt(2.0 * nu)
        assert delta == pytest.approx(0.7071, abs=1e-4)

    def test_non_spd_preimage_raises(self):
        with pytest.raises(ValueError, match="positive definite"):
            transformed_ratio_expansion(
                50.0, [[1.0]], lambda y: np.array([[-1.0]]), 0.0
            )
