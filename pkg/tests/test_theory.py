"""Tests for the closed-form efficiency and variance engine."""

import math

import numpy as np
import pytest

from vimsel.core import ValidationError
from vimsel.theory import (
    CvPair,
    ModelMoments,
    are_example1,
    are_nonlinear,
    condition_b_ratio,
    cv_linear,
    cv_single_index,
    empirical_moments,
    normal_even_moment,
    sigmoid_and_derivative,
    variance_formulas,
)


def standard_normal_linear(noise_var=1.0):
    """Moments of (Xt, ft) when ft = Xt and Xt is standard normal."""
    return ModelMoments(
        noise_var=noise_var,
        e_xt2=1.0,
        var_xt2=2.0,
        e_ft2=1.0,
        e_ft4=3.0,
        e_xt_ft=1.0,
        e_xt2_ft2=3.0,
    )


def sample_moments(rng, noise_var=None, unconditional=False):
    """Valid-by-construction plug-in moments from a random finite sample."""
    xt = rng.normal(size=40)
    a, b, c = rng.normal(size=3)
    ft = a * xt + b * (xt**2 - 1.0) + c * xt**3
    if noise_var is None:
        noise_var = float(rng.uniform(0.0, 4.0))
    return empirical_moments(xt, ft, noise_var, unconditional=unconditional)


def scale_component(m, c, scale_noise=True):
    """Moments after ft -> c * ft, optionally with noise sd scaled by c too."""
    return ModelMoments(
        noise_var=m.noise_var * (c**2 if scale_noise else 1.0),
        e_xt2=m.e_xt2,
        var_xt2=m.var_xt2,
        e_ft2=m.e_ft2 * c**2,
        e_ft4=m.e_ft4 * c**4,
        e_xt_ft=m.e_xt_ft * c,
        e_xt2_ft2=m.e_xt2_ft2 * c**2,
        e_xh2=m.e_xh2,
        var_xh2=m.var_xh2,
    )


class TestModelMoments:
    def test_variance_properties(self):
        m = standard_normal_linear(1.0)
        assert m.var_xt_ft == 3.0 - 1.0
        assert m.var_ft2 == 3.0 - 1.0

    def test_rejects_nonpositive_e_xt2(self):
        with pytest.raises(ValidationError):
            ModelMoments(1.0, 0.0, 2.0, 1.0, 3.0, 1.0, 3.0)

    def test_rejects_negative_noise(self):
        with pytest.raises(ValidationError):
            ModelMoments(-0.1, 1.0, 2.0, 1.0, 3.0, 1.0, 3.0)

    def test_rejects_fourth_moment_below_square(self):
        with pytest.raises(ValidationError, match="dominate"):
            ModelMoments(1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 3.0)

    def test_rejects_cauchy_schwarz_violation(self):
        with pytest.raises(ValidationError, match="Cauchy"):
            ModelMoments(1.0, 1.0, 2.0, 1.0, 3.0, 1.5, 3.0)

    def test_unconditional_fields_come_in_pairs(self):
        with pytest.raises(ValidationError, match="together"):
            ModelMoments(1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 3.0, e_xh2=1.0)

    def test_unconditional_variance_dominates_conditional(self):
        with pytest.raises(ValidationError, match="unconditional"):
            ModelMoments(1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 3.0, e_xh2=0.5, var_xh2=2.0)

    def test_rejects_overflowing_fourth_moment(self):
        with pytest.raises(ValidationError, match="too large"):
            ModelMoments(1.0, 1.0, 2.0, 1e80, 1e301, 0.0, 3.0)
        with pytest.raises(ValidationError, match="too large"):
            ModelMoments(1.0, 1.0, 2.0, 1.0, float("inf"), 0.0, 3.0)

    def test_sample_plug_ins_always_satisfy_invariants(self):
        rng = np.random.default_rng(101)
        for _ in range(50):
            m = sample_moments(rng, unconditional=True)
            assert m.e_xt2 > 0
            assert m.var_ft2 >= -1e-9 * max(m.e_ft4, 1.0)
            assert m.e_xh2 == m.e_xt2


class TestCvPair:
    def test_consistent_pair_accepted(self):
        pair = CvPair(1.0, 2.0, 4.0, 100)
        assert pair.are == 4.0
        assert pair.sample_size == 100

    def test_inconsistent_are_rejected(self):
        with pytest.raises(ValidationError, match="must equal"):
            CvPair(1.0, 2.0, 3.9, 100)

    def test_negative_boundary_rejected(self):
        with pytest.raises(ValidationError):
            CvPair(-1.0, 2.0, 4.0, 100)

    def test_sample_size_at_least_one(self):
        with pytest.raises(ValidationError, match="sample_size"):
            CvPair(1.0, 2.0, 4.0, 0)


class TestCvLinear:
    def test_unit_problem_boundaries(self):
        # b=1, E Xt^2=1, Var Xt^2=2, noise 1, n=1: sqrt(3), sqrt(6), ratio 2
        pair = cv_linear(1.0, standard_normal_linear(1.0), 1)
        assert abs(pair.cv_gcm - math.sqrt(3.0)) < 1e-12
        assert abs(pair.cv_loco - math.sqrt(6.0)) < 1e-12
        assert abs(pair.are - 2.0) < 1e-12
        assert pair.sample_size == 1

    def test_noise_free_ratio_is_one(self):
        pair = cv_linear(1.3, standard_normal_linear(0.0), 50)
        assert pair.are == 1.0

    def test_boundaries_shrink_like_root_n(self):
        m = standard_normal_linear(1.0)
        small = cv_linear(0.7, m, 1)
        large = cv_linear(0.7, m, 100)
        assert abs(large.cv_gcm - small.cv_gcm / 10.0) < 1e-12
        assert abs(large.cv_loco - small.cv_loco / 10.0) < 1e-12
        assert large.are == small.are

    def test_ratio_exceeds_one_with_noise(self):
        rng = np.random.default_rng(102)
        for _ in range(200):
            m = sample_moments(rng, noise_var=float(rng.uniform(0.01, 5.0)))
            beta = float(rng.uniform(0.1, 3.0)) * (-1.0 if rng.random() < 0.5 else 1.0)
            assert cv_linear(beta, m, 500).are > 1.0

    def test_ratio_invariant_to_response_units(self):
        # scaling beta and the noise sd together rescales Y only
        rng = np.random.default_rng(103)
        for _ in range(30):
            m = sample_moments(rng, noise_var=float(rng.uniform(0.1, 2.0)))
            beta = float(rng.uniform(0.2, 2.0))
            c = float(rng.uniform(0.05, 20.0))
            scaled = ModelMoments(
                m.noise_var * c**2, m.e_xt2, m.var_xt2, m.e_ft2, m.e_ft4,
                m.e_xt_ft, m.e_xt2_ft2,
            )
            base = cv_linear(beta, m, 200)
            moved = cv_linear(beta * c, scaled, 200)
            assert abs(moved.cv_gcm - base.cv_gcm) < 1e-9 * base.cv_gcm
            assert abs(moved.cv_loco - base.cv_loco) < 1e-9 * base.cv_loco
            assert abs(moved.are - base.are) < 1e-9 * base.are

    def test_zero_coefficient_rejected(self):
        with pytest.raises(ValidationError, match="nonzero"):
            cv_linear(0.0, standard_normal_linear(), 10)

    def test_bad_sample_size_rejected(self):
        with pytest.raises(ValidationError, match="at least 1"):
            cv_linear(1.0, standard_normal_linear(), 0)


class TestAreExample1:
    def test_balanced_case_value(self):
        # r = 1, t = 2 * 0.75 = 1.5, so (4 + 1.5) / (1 + 1.5) = 2.2
        assert abs(are_example1(1.0, 0.5, 1.0, 1.0) - 2.2) < 1e-12

    def test_agrees_with_general_linear_formula(self):
        rng = np.random.default_rng(104)
        for _ in range(40):
            beta = float(rng.uniform(0.2, 3.0))
            rho = float(rng.uniform(-0.9, 0.9))
            sigma_x = float(rng.uniform(0.3, 2.0))
            sigma_eps = float(rng.uniform(0.05, 4.0))
            e_xt2 = (1.0 - rho**2) * sigma_x**2
            m = ModelMoments(
                noise_var=sigma_eps**2,
                e_xt2=e_xt2,
                var_xt2=2.0 * e_xt2**2,
                e_ft2=beta**2 * e_xt2,
                e_ft4=3.0 * beta**4 * e_xt2**2,
                e_xt_ft=beta * e_xt2,
                e_xt2_ft2=3.0 * beta**2 * e_xt2**2,
            )
            direct = are_example1(beta, rho, sigma_x, sigma_eps)
            general = cv_linear(beta, m, 1000).are
            assert abs(direct - general) < 1e-9 * general

    def test_noise_free_limit(self):
        assert are_example1(1.0, 0.5, 1.0, 0.0) == 1.0
        assert are_example1(1.0, 0.5, 1.0, 0.01) < 1.05

    def test_noise_dominated_limit(self):
        value = are_example1(1.0, 0.5, 1.0, 100.0)
        assert value >= 3.9
        assert value < 4.0

    def test_range_and_monotonicity(self):
        rng = np.random.default_rng(105)
        for _ in range(50):
            beta = float(rng.uniform(0.2, 3.0))
            rho = float(rng.uniform(-0.9, 0.9))
            sigma_x = float(rng.uniform(0.3, 2.0))
            grid = np.sort(rng.uniform(0.01, 10.0, size=8))
            values = [are_example1(beta, rho, sigma_x, s) for s in grid]
            for v in values:
                assert 1.0 < v < 4.0
            for lo, hi in zip(values, values[1:]):
                assert hi > lo

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValidationError):
            are_example1(0.0, 0.5, 1.0, 1.0)
        with pytest.raises(ValidationError):
            are_example1(1.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValidationError):
            are_example1(1.0, 0.5, 0.0, 1.0)
        with pytest.raises(ValidationError):
            are_example1(1.0, 0.5, 1.0, -1.0)


class TestConditionB:
    def test_linear_standard_normal_ratio(self):
        # LHS = 1 and RHS = (3 + 1) / (3 + 4), so the ratio is 7/4
        assert abs(condition_b_ratio(standard_normal_linear(1.0)) - 1.75) < 1e-12

    def test_even_component_ratio_is_zero(self):
        # ft = Xt^2 - 1 for standard normal Xt: E Xt ft = 0
        m = ModelMoments(
            noise_var=1.0,
            e_xt2=1.0,
            var_xt2=2.0,
            e_ft2=2.0,
            e_ft4=60.0,
            e_xt_ft=0.0,
            e_xt2_ft2=10.0,
        )
        assert condition_b_ratio(m) == 0.0

    def test_homogeneous_in_component_scale(self):
        # degree-1 scaling of (ft, noise sd) leaves both sides alone
        rng = np.random.default_rng(106)
        for _ in range(25):
            m = sample_moments(rng, noise_var=float(rng.uniform(0.1, 3.0)))
            base = condition_b_ratio(m)
            for c in (0.03, 0.4, 2.5, 40.0):
                moved = condition_b_ratio(scale_component(m, c))
                assert abs(moved - base) < 1e-9 * max(abs(base), 1.0)

    def test_homogeneous_in_component_scale_noise_free(self):
        # with zero noise the ft moments alone carry the scale
        rng = np.random.default_rng(107)
        for _ in range(25):
            m = sample_moments(rng, noise_var=0.0)
            base = condition_b_ratio(m)
            for c in (0.2, 5.0):
                moved = condition_b_ratio(scale_component(m, c, scale_noise=False))
                assert abs(moved - base) < 1e-9 * max(abs(base), 1.0)

    def test_zero_component_rejected(self):
        m = standard_normal_linear(1.0)
        degenerate = ModelMoments(1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0)
        assert condition_b_ratio(m) > 0
        with pytest.raises(ValidationError, match="e_ft2"):
            condition_b_ratio(degenerate)


class TestAreNonlinear:
    def test_reduces_to_linear_case(self):
        for noise in (0.3, 1.0, 2.5):
            for n in (1, 50):
                m = standard_normal_linear(noise)
                nl = are_nonlinear(m, n)
                lin = cv_linear(1.0, m, n)
                assert abs(nl.cv_gcm - lin.cv_gcm) < 1e-12
                assert abs(nl.cv_loco - lin.cv_loco) < 1e-12
                assert abs(nl.are - lin.are) < 1e-12

    def test_cubic_component_favors_residual_product(self):
        # ft = Xt^3 for standard normal Xt; all moments from the even-moment
        # oracle: E X^6, E X^12, E X^4, E X^8
        m = ModelMoments(
            noise_var=1.0,
            e_xt2=1.0,
            var_xt2=2.0,
            e_ft2=normal_even_moment(3),
            e_ft4=normal_even_moment(6),
            e_xt_ft=normal_even_moment(2),
            e_xt2_ft2=normal_even_moment(4),
        )
        assert m.e_ft2 == 15.0
        assert m.e_ft4 == 10395.0
        assert m.e_xt_ft == 3.0
        assert m.e_xt2_ft2 == 105.0
        assert are_nonlinear(m, 1000).are > 1.0

    def test_sign_agrees_with_correlation_condition(self):
        rng = np.random.default_rng(108)
        for _ in range(400):
            m = sample_moments(rng, noise_var=float(rng.uniform(0.0, 4.0)))
            ratio = condition_b_ratio(m)
            if abs(ratio - 1.0) < 1e-12:
                continue
            are = are_nonlinear(m, 100).are
            assert (are > 1.0) == (ratio > 1.0)

    def test_ratio_invariant_to_component_units(self):
        rng = np.random.default_rng(109)
        for _ in range(30):
            m = sample_moments(rng, noise_var=float(rng.uniform(0.1, 2.0)))
            base = are_nonlinear(m, 300)
            moved = are_nonlinear(scale_component(m, float(rng.uniform(0.1, 8.0))), 300)
            assert abs(moved.cv_gcm - base.cv_gcm) < 1e-9 * base.cv_gcm
            assert abs(moved.cv_loco - base.cv_loco) < 1e-9 * base.cv_loco
            assert abs(moved.are - base.are) < 1e-9 * base.are

    def test_even_component_rejected(self):
        m = ModelMoments(1.0, 1.0, 2.0, 2.0, 60.0, 0.0, 10.0)
        with pytest.raises(ValidationError, match="even"):
            are_nonlinear(m, 100)


class TestNormalEvenMoment:
    def test_double_factorial_values(self):
        assert normal_even_moment(0) == 1.0
        assert normal_even_moment(1) == 1.0
        assert normal_even_moment(2) == 3.0
        assert normal_even_moment(3) == 15.0
        assert normal_even_moment(4) == 105.0
        assert normal_even_moment(6) == 10395.0

    def test_matches_factorial_formula(self):
        for t in range(16):
            expected = math.factorial(2 * t) / (2**t * math.factorial(t))
            assert normal_even_moment(t) == expected

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            normal_even_moment(16)
        with pytest.raises(ValidationError):
            normal_even_moment(-1)
        with pytest.raises(ValidationError, match="integer"):
            normal_even_moment(1.5)
        with pytest.raises(ValidationError, match="integer"):
            normal_even_moment("2")


class TestCvSingleIndex:
    def test_identity_link_matches_linear(self):
        rng = np.random.default_rng(110)
        for _ in range(25):
            m = sample_moments(rng, noise_var=float(rng.uniform(0.1, 3.0)))
            beta = float(rng.uniform(0.2, 2.5))
            si = cv_single_index(beta, 1.0, m, 400)
            lin = cv_linear(beta, m, 400)
            assert abs(si.cv_gcm - lin.cv_gcm) < 1e-12 * max(lin.cv_gcm, 1.0)
            assert abs(si.cv_loco - lin.cv_loco) < 1e-12 * max(lin.cv_loco, 1.0)
            assert abs(si.are - lin.are) < 1e-12 * max(lin.are, 1.0)

    def test_ratio_decreases_in_link_slope(self):
        m = standard_normal_linear(1.0)
        grid = np.logspace(-3, 3, 25)
        values = [cv_single_index(1.0, float(g), m, 100).are for g in grid]
        for lo, hi in zip(values, values[1:]):
            assert hi < lo
        assert values[0] > 3.99
        assert values[-1] < 1.01

    def test_ratio_exceeds_one(self):
        rng = np.random.default_rng(111)
        for _ in range(100):
            m = sample_moments(rng, noise_var=float(rng.uniform(0.01, 4.0)))
            beta = float(rng.uniform(0.1, 2.0))
            slope = float(rng.uniform(0.05, 5.0))
            assert cv_single_index(beta, slope, m, 200).are > 1.0

    def test_ratio_invariant_to_response_units(self):
        m = standard_normal_linear(1.0)
        base = cv_single_index(0.8, 0.6, m, 150)
        for c in (0.1, 3.0, 25.0):
            scaled = ModelMoments(c**2, 1.0, 2.0, 1.0, 3.0, 1.0, 3.0)
            via_beta = cv_single_index(0.8 * c, 0.6, scaled, 150)
            via_slope = cv_single_index(0.8, 0.6 * c, scaled, 150)
            for moved in (via_beta, via_slope):
                assert abs(moved.cv_gcm - base.cv_gcm) < 1e-9 * base.cv_gcm
                assert abs(moved.cv_loco - base.cv_loco) < 1e-9 * base.cv_loco
                assert abs(moved.are - base.are) < 1e-9 * base.are

    def test_flat_or_decreasing_link_rejected(self):
        m = standard_normal_linear(1.0)
        with pytest.raises(ValidationError, match="positive"):
            cv_single_index(1.0, 0.0, m, 100)
        with pytest.raises(ValidationError, match="positive"):
            cv_single_index(1.0, -0.5, m, 100)
        with pytest.raises(ValidationError, match="nonzero"):
            cv_single_index(0.0, 1.0, m, 100)


class TestSigmoid:
    def test_symmetry_point(self):
        assert sigmoid_and_derivative(0.0) == (0.5, 0.25)

    def test_saturation(self):
        value, deriv = sigmoid_and_derivative(700.0)
        assert value == 1.0
        assert deriv < 1e-200
        value, deriv = sigmoid_and_derivative(-700.0)
        assert 0.0 < value < 1e-200
        assert deriv < 1e-200

    def test_reflection_identities(self):
        for x in (-5.0, -1.2, 0.3, 2.0, 8.0):
            v_pos, d_pos = sigmoid_and_derivative(x)
            v_neg, d_neg = sigmoid_and_derivative(-x)
            assert abs(v_pos + v_neg - 1.0) < 1e-15
            assert abs(d_pos - d_neg) < 1e-15

    def test_derivative_matches_finite_difference(self):
        h = 1e-6
        for x in (-3.0, -1.0, 0.0, 1.0, 3.0):
            _, deriv = sigmoid_and_derivative(x)
            upper, _ = sigmoid_and_derivative(x + h)
            lower, _ = sigmoid_and_derivative(x - h)
            assert abs(deriv - (upper - lower) / (2 * h)) < 1e-8

    def test_vector_input(self):
        xs = np.array([-2.0, 0.0, 1.5])
        values, derivs = sigmoid_and_derivative(xs)
        assert values.shape == xs.shape
        for i, x in enumerate(xs):
            v, d = sigmoid_and_derivative(float(x))
            assert values[i] == v
            assert derivs[i] == d

    def test_monotone_increasing(self):
        grid = np.linspace(-30.0, 30.0, 121)
        values, _ = sigmoid_and_derivative(grid)
        assert np.all(np.diff(values) > 0)

    def test_overflow_guard(self):
        with pytest.raises(ValidationError, match="700"):
            sigmoid_and_derivative(701.0)
        with pytest.raises(ValidationError, match="700"):
            sigmoid_and_derivative(-701.0)
        with pytest.raises(ValidationError, match="700"):
            sigmoid_and_derivative(np.array([0.0, 800.0]))


class TestVarianceFormulas:
    def test_linear_gcm_display(self):
        m = standard_normal_linear(1.0)
        mean, variance = variance_formulas("linear", "gcm", {"beta_j": 2.0}, m)
        assert mean == 2.0 * 1.0
        assert variance == 4.0 * 2.0 + 1.0 * 1.0

    def test_boundaries_reconstructed_from_summand_moments(self):
        # cv = sqrt(variance) / (|mean| sqrt(n)) must reproduce the CvPair
        rng = np.random.default_rng(112)
        for _ in range(20):
            m = sample_moments(rng, noise_var=float(rng.uniform(0.1, 2.0)))
            beta = float(rng.uniform(0.2, 2.0))
            slope = float(rng.uniform(0.2, 2.0))
            n = 250
            lin = cv_linear(beta, m, n)
            si = cv_single_index(beta, slope, m, n)
            for pair, params, model in (
                (lin, {"beta_j": beta}, "linear"),
                (si, {"beta_j": beta, "eta_prime": slope}, "single_index"),
            ):
                g_mean, g_var = variance_formulas(model, "gcm", params, m)
                l_mean, l_var = variance_formulas(model, "loco", params, m)
                cv_g = math.sqrt(g_var) / (abs(g_mean) * math.sqrt(n))
                cv_l = math.sqrt(l_var) / (abs(l_mean) * math.sqrt(n))
                assert abs(cv_g - pair.cv_gcm) < 1e-12 * max(pair.cv_gcm, 1.0)
                assert abs(cv_l - pair.cv_loco) < 1e-12 * max(pair.cv_loco, 1.0)

    def test_dropout_equals_refit_for_independent_feature(self):
        m = ModelMoments(
            noise_var=0.7, e_xt2=1.3, var_xt2=2.9, e_ft2=1.0, e_ft4=3.0,
            e_xt_ft=1.0, e_xt2_ft2=3.0, e_xh2=1.3, var_xh2=2.9,
        )
        params = {"beta_j": 1.4}
        assert variance_formulas("linear", "dropout", params, m) == variance_formulas(
            "linear", "loco", params, m
        )

    def test_dropout_exceeds_refit_for_correlated_pair(self):
        # rho = 0.5 Gaussian pair: conditional second moment 0.75 versus
        # unconditional 1, so freezing the feature inflates the variance
        m = ModelMoments(
            noise_var=1.0, e_xt2=0.75, var_xt2=1.125, e_ft2=0.75, e_ft4=1.6875,
            e_xt_ft=0.75, e_xt2_ft2=1.6875, e_xh2=1.0, var_xh2=2.0,
        )
        params = {"beta_j": 1.0}
        loco_mean, loco_var = variance_formulas("linear", "loco", params, m)
        drop_mean, drop_var = variance_formulas("linear", "dropout", params, m)
        assert abs(loco_var - 4.125) < 1e-12
        assert abs(drop_var - 6.0) < 1e-12
        assert drop_var > loco_var

        rng = np.random.default_rng(113)
        x2 = rng.normal(size=1_000_000)
        x1 = 0.5 * x2 + math.sqrt(0.75) * rng.normal(size=1_000_000)
        eps = rng.normal(size=1_000_000)
        y = x1 + eps
        loco_summand = (y - 0.5 * x2) ** 2 - eps**2
        drop_summand = y**2 - eps**2
        assert abs(loco_summand.mean() - loco_mean) < 0.02 * loco_mean
        assert abs(drop_summand.mean() - drop_mean) < 0.02 * drop_mean
        assert abs(loco_summand.var() - loco_var) < 0.02 * loco_var
        assert abs(drop_summand.var() - drop_var) < 0.02 * drop_var

    def test_nonlinear_dropout_without_imputation_gap(self):
        # odd component ft = Xt^3: E f = f(mean) = 0, so dropout matches the
        # refit display; verified against simulation
        rng = np.random.default_rng(114)
        x = rng.normal(size=1_000_000)
        f = x**3
        eps = rng.normal(size=1_000_000)
        m = empirical_moments(x, f, 1.0)
        params = {
            "e_f": float(f.mean()),
            "f_at_mean": 0.0,
            "var_f": float(f.var()),
            "fourth_central": float(((f - f.mean()) ** 4).mean()),
        }
        mean, variance = variance_formulas("nonlinear_additive", "dropout", params, m)
        summand = (f + eps) ** 2 - eps**2
        assert abs(summand.mean() - mean) < 0.02 * mean
        assert abs(summand.var() - variance) < 0.05 * variance

    def test_nonlinear_dropout_pure_imputation_gap(self):
        # f(X) = X^2 on X = +/-1: f is constant 1 on the support but f(0) = 0,
        # so only the gap term survives: mean 1, variance 4 sigma^2
        m = ModelMoments(1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0)
        params = {"e_f": 1.0, "f_at_mean": 0.0, "var_f": 0.0, "fourth_central": 0.0}
        mean, variance = variance_formulas("nonlinear_additive", "dropout", params, m)
        assert mean == 1.0
        assert variance == 4.0

        rng = np.random.default_rng(115)
        eps = rng.normal(size=1_000_000)
        summand = (1.0 + eps) ** 2 - eps**2
        assert abs(summand.mean() - mean) < 0.01
        assert abs(summand.var() - variance) < 0.02 * variance

    def test_variance_never_negative(self):
        rng = np.random.default_rng(116)
        cases = [
            ("linear", "gcm"), ("linear", "loco"), ("linear", "dropout"),
            ("nonlinear_additive", "gcm"), ("nonlinear_additive", "loco"),
            ("nonlinear_additive", "dropout"),
            ("single_index", "gcm"), ("single_index", "loco"),
            ("single_index", "dropout"),
        ]
        for _ in range(100):
            m = sample_moments(rng, unconditional=True)
            f_sample = rng.normal(size=30) * float(rng.uniform(0.1, 3.0))
            params = {
                "beta_j": float(rng.uniform(0.1, 3.0)),
                "eta_prime": float(rng.uniform(0.1, 3.0)),
                "e_f": float(f_sample.mean()),
                "f_at_mean": float(rng.normal()),
                "var_f": float(f_sample.var()),
                "fourth_central": float(((f_sample - f_sample.mean()) ** 4).mean()),
            }
            for model, method in cases:
                _, variance = variance_formulas(model, method, params, m)
                assert variance >= 0.0

    def test_unknown_combinations_rejected(self):
        m = standard_normal_linear(1.0)
        with pytest.raises(ValidationError, match="unknown model"):
            variance_formulas("quadratic", "gcm", {"beta_j": 1.0}, m)
        with pytest.raises(ValidationError, match="unknown method"):
            variance_formulas("linear", "anova", {"beta_j": 1.0}, m)

    def test_missing_parameters_rejected(self):
        m = standard_normal_linear(1.0)
        with pytest.raises(ValidationError, match="beta_j"):
            variance_formulas("linear", "gcm", {}, m)
        with pytest.raises(ValidationError, match="eta_prime"):
            variance_formulas("single_index", "gcm", {"beta_j": 1.0}, m)
        with pytest.raises(ValidationError, match="var_f"):
            variance_formulas(
                "nonlinear_additive", "dropout", {"e_f": 1.0, "f_at_mean": 0.0}, m
            )

    def test_dropout_needs_unconditional_moments(self):
        with pytest.raises(ValidationError, match="e_xh2"):
            variance_formulas(
                "linear", "dropout", {"beta_j": 1.0}, standard_normal_linear(1.0)
            )


class TestEmpiricalMoments:
    def test_two_point_sample(self):
        m = empirical_moments([1.0, -1.0], [1.0, -1.0], 0.5)
        assert m.e_xt2 == 1.0
        assert m.var_xt2 == 0.0
        assert m.e_ft2 == 1.0
        assert m.e_ft4 == 1.0
        assert m.e_xt_ft == 1.0
        assert m.e_xt2_ft2 == 1.0
        assert m.noise_var == 0.5
        assert m.e_xh2 is None

    def test_cubic_moments_approach_oracle(self):
        rng = np.random.default_rng(117)
        xt = rng.normal(size=1_000_000)
        m = empirical_moments(xt, xt**3, 1.0)
        assert abs(m.e_xt2 - 1.0) < 0.01
        assert abs(m.e_ft2 - 15.0) < 0.02 * 15.0
        assert abs(m.e_xt_ft - 3.0) < 0.02 * 3.0
        assert abs(m.e_xt2_ft2 - 105.0) < 0.05 * 105.0

    def test_unconditional_flag_fills_hat_moments(self):
        rng = np.random.default_rng(118)
        xt = rng.normal(size=100)
        m = empirical_moments(xt, 2.0 * xt, 1.0, unconditional=True)
        assert m.e_xh2 == m.e_xt2
        assert m.var_xh2 == m.var_xt2

    def test_zero_samples_rejected(self):
        with pytest.raises(ValidationError, match="identically zero"):
            empirical_moments(np.zeros(10), np.ones(10), 1.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError, match="3 vs 2"):
            empirical_moments([1.0, 2.0, 3.0], [1.0, 2.0], 1.0)

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValidationError, match="at least 2"):
            empirical_moments([1.0], [1.0], 1.0)

    def test_negative_noise_rejected(self):
        with pytest.raises(ValidationError, match="noise_var"):
            empirical_moments([1.0, -1.0], [1.0, -1.0], -0.1)
