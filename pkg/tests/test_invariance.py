"""Tests for the paired-run invariance checks."""

import numpy as np
import pytest

from stepadapt import (
    AlgorithmState,
    AlgorithmSpec,
    check_monotone_invariance,
    check_scale_invariance,
    check_translation_invariance,
    make_csa,
    make_oneplusone,
    make_sa,
    make_xnes,
    quadratic,
    quarter_power,
    sphere,
)
from stepadapt.algorithms import rank_improvement_first, sol_es
from stepadapt.core import SampleBlock


def state(n, sigma=1.0, fill=0.8):
    return AlgorithmState(np.full(n, fill), sigma)


class TestMonotone:
    def test_identity_transform_trivially_passes(self):
        report = check_monotone_invariance(
            make_oneplusone(4), sphere(n=4), lambda u: u, state(4), 100, 0,
            g_label="identity")
        assert report.passed
        assert report.max_x_deviation == 0.0
        assert report.max_sigma_deviation == 0.0

    def test_quarter_power_replay_is_bit_identical(self):
        report = check_monotone_invariance(
            make_oneplusone(6), sphere(n=6), quarter_power, state(6), 1000, 1,
            g_label="g^{1/4}")
        assert report.passed and report.max_x_deviation == 0.0

    def test_arctan_on_quadratic_with_csa(self):
        obj = quadratic(np.diag(np.arange(1.0, 6.0)))
        report = check_monotone_invariance(
            make_csa(5), obj, np.arctan, state(5), 1000, 2, g_label="arctan")
        assert report.passed and report.max_sigma_deviation == 0.0


class TestTranslation:
    def test_zero_offset_is_identical(self):
        report = check_translation_invariance(
            make_xnes(4), sphere(n=4), np.zeros(4), state(4), 100, 3)
        assert report.passed and report.max_x_deviation == 0.0

    def test_unit_offset_oneplusone(self):
        report = check_translation_invariance(
            make_oneplusone(5), sphere(n=5), np.ones(5), state(5), 1000, 4)
        assert report.passed
        assert report.max_x_deviation <= 1e-9

    def test_large_offset_needs_looser_tolerance(self):
        # a 100 e_1 shift loses about 10 of the 16 digits to cancellation;
        # the horizon must stop while sigma is still far above the
        # absorption noise floor of eps * |offset|
        offset = np.zeros(4)
        offset[0] = 100.0
        report = check_translation_invariance(
            make_sa(4), quadratic(np.diag([1.0, 2.0, 3.0, 4.0])), offset,
            state(4), 120, 5, tolerance=1e-6)
        assert report.passed

    def test_failure_reports_first_divergence(self):
        # an update that leaks the absolute position of x is not
        # translation invariant; the report must localize the break
        n = 3
        base = make_oneplusone(n)

        def leaky_g1(s, y):
            return s.x + s.sigma * y.coords[0] + 1e-3 * s.x

        spec = AlgorithmSpec(
            name="leaky", p=2, m=n, sol=sol_es, g1=leaky_g1, g2=base.g2,
            sampler=base.sampler, ord_fn=rank_improvement_first,
            evals_per_iter=1,
        )
        report = check_translation_invariance(
            spec, sphere(n=n), np.ones(n), state(n), 50, 6)
        assert not report.passed
        assert report.fail_t is not None
        assert report.fail_state_a is not None
        assert report.fail_state_b is not None


class TestScale:
    def test_alpha_one_is_identical(self):
        report = check_scale_invariance(
            make_csa(4), sphere(n=4), 1.0, state(4), 100, 7)
        assert report.passed and report.max_x_deviation == 0.0

    def test_power_of_two_alpha_is_exact(self):
        for alpha in (2.0 ** -4, 2.0 ** 10):
            report = check_scale_invariance(
                make_xnes(5), sphere(n=5), alpha, state(5), 500, 8)
            assert report.passed, report
            assert report.max_x_deviation == 0.0
            assert report.max_sigma_deviation == 0.0

    def test_non_power_of_two_within_tolerance(self):
        # rounding differences compound at the convergence rate
        # (about e^(cr * t)), so the 1e-9 tolerance fixes the
        # verifiable horizon at roughly 16 / cr steps
        report = check_scale_invariance(
            make_csa(5), quadratic(np.diag(np.arange(1.0, 6.0))), 3.0,
            state(5), 100, 9)
        assert report.passed
        assert 0.0 < report.max_x_deviation <= 1e-9

    def test_rejects_negative_alpha(self):
        with pytest.raises(ValueError):
            check_scale_invariance(make_csa(3), sphere(n=3), -2.0, state(3),
                                   10, 0)
