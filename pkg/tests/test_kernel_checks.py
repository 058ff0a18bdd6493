import math

import numpy as np
import pytest
from scipy import special

from qgflow import kernel_checks as kc
from qgflow import regression as reg
from qgflow.errors import DomainError
from qgflow.verify import defect_smoothing_bound


class TestBetaIntegral:
    def test_half_half_is_pi(self):
        val, _ = kc.singular_time_integral(0.5, 0.5, 1.0)
        assert val == pytest.approx(math.pi, rel=1e-12)

    @pytest.mark.parametrize("a,b,t", [(0.1, 0.9, 0.5), (0.7, 0.3, 3.0), (0.9, 0.9, 1.0)])
    def test_against_beta(self, a, b, t):
        val, _ = kc.singular_time_integral(a, b, t)
        assert val == pytest.approx(special.beta(1 - a, 1 - b) * t ** (1 - a - b), rel=1e-10)

    def test_grid_check_passes(self):
        res = kc.beta_integral_check()
        assert res.passed and res.measured <= 1e-6
        assert len(res.details["table"]) == 75

    @pytest.mark.parametrize("a,b", [(0.0, 0.5), (1.0, 0.5), (0.5, -0.1)])
    def test_outside_open_square(self, a, b):
        with pytest.raises(DomainError):
            kc.singular_time_integral(a, b)


class TestPoisson:
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 4.0])
    def test_probability_kernel(self, t):
        assert kc.radial_lp_norm(kc.poisson_kernel, t, 1) == pytest.approx(1.0, abs=1e-10)

    def test_l2_exponent(self):
        slope, _ = kc.lp_exponent_fit(kc.poisson_kernel, 2)
        assert slope == pytest.approx(-1.0, rel=0.02)

    def test_all_exponents(self):
        assert all(r.passed for r in kc.poisson_scaling_check())

    @pytest.mark.parametrize("rho,t", [(0.1, 0.5), (1.0, 1.0), (3.0, 2.0)])
    def test_riesz_closed_form_matches_spectral(self, rho, t):
        assert kc.riesz_poisson_hankel(rho, t) == pytest.approx(kc.riesz_poisson_kernel(rho, t), rel=1e-8)

    def test_riesz_l2_closed_form(self):
        # 2 pi int rho^3 / (4 pi^2 (t^2+rho^2)^3) d rho = 1 / (8 pi t^2)
        t = 1.3
        assert kc.radial_lp_norm(kc.riesz_poisson_kernel, t, 2) ** 2 == pytest.approx(1 / (8 * math.pi * t * t))

    @pytest.mark.parametrize("a", [0.01, 0.1, 1.0])
    def test_product_kernel_l1(self, a):
        assert kc.product_poisson_l1(a) == pytest.approx(reg.PRODUCT_POISSON_L1, abs=1e-10)

    def test_defect_smoothing_never_amplifies_sup(self):
        _, ratio = defect_smoothing_bound()
        assert ratio <= 1 + 1e-12


class TestHalfIntegral:
    def test_constant_input(self):
        # int_0^t (t-s)^-1/2 ds = 2 sqrt(t)
        m = 64
        out = kc.half_integral(np.ones(m))
        t = np.linspace(0, 1, m + 1)[1:]
        np.testing.assert_allclose(out, 2 * np.sqrt(t), rtol=1e-12)

    def test_linear_in_input(self):
        rng = np.random.default_rng(0)
        a, b = rng.standard_normal((2, 32))
        np.testing.assert_allclose(kc.half_integral(a + 2 * b), kc.half_integral(a) + 2 * kc.half_integral(b))

    def test_ratio_regression(self):
        r = kc.hls_ratios()
        assert r.max() <= (1 + reg.SLACK) * reg.HLS_RATIO
        assert r.size == 200
