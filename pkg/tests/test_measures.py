"""Tests for lattice measures, distribution builders and functionals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compoundruns.measures import (LatticeMeasure, TargetParamsM1,
                                   TargetParamsM2, make_binomial,
                                   make_negative_binomial,
                                   make_pseudo_binomial, make_poisson,
                                   make_compound_m1, make_compound_m2,
                                   convolve, tv_distance, smoothness_D,
                                   smoothness_D1, raw_moments,
                                   factorial_cumulants, point_mass,
                                   ParameterError)


def linf(a: LatticeMeasure, b: LatticeMeasure) -> float:
    lo = min(a.offset, b.offset)
    hi = max(a.offset + a.weights.size, b.offset + b.weights.size)
    wa = np.zeros(hi - lo)
    wb = np.zeros(hi - lo)
    wa[a.offset - lo : a.offset - lo + a.weights.size] = a.weights
    wb[b.offset - lo : b.offset - lo + b.weights.size] = b.weights
    return float(np.abs(wa - wb).max())


class TestBuilders:
    def test_binomial_pmf_matches_comb_formula(self):
        n, p = 9, 0.37
        mu = make_binomial(n, p)
        for k in range(n + 1):
            ref = math.comb(n, k) * p**k * (1 - p) ** (n - k)
            assert mu.pmf(k) == pytest.approx(ref, abs=1e-15)

    def test_negative_binomial_pmf(self):
        r, pbar = 2.5, 0.6
        qbar = 1 - pbar
        mu = make_negative_binomial(r, pbar)
        for k in range(8):
            ref = (math.gamma(r + k) / (math.gamma(r) * math.factorial(k))
                   * pbar**r * qbar**k)
            assert mu.pmf(k) == pytest.approx(ref, rel=1e-12)

    def test_poisson_pmf(self):
        lam = 1.7
        mu = make_poisson(lam)
        for k in range(10):
            ref = math.exp(-lam) * lam**k / math.factorial(k)
            assert mu.pmf(k) == pytest.approx(ref, rel=1e-12)

    def test_pseudo_binomial_truncates_and_renormalizes(self):
        N, p = 7.6, 0.3
        mu = make_pseudo_binomial(N, p)
        assert mu.weights.size == math.floor(N) + 1
        assert mu.total_mass == pytest.approx(1.0, abs=1e-12)
        # ratio test against the binomial-type recursion
        for k in range(math.floor(N)):
            ratio = mu.pmf(k + 1) / mu.pmf(k)
            ref = (N - k) / (k + 1) * p / (1 - p)
            assert ratio == pytest.approx(ref, rel=1e-10)

    def test_integer_pseudo_binomial_is_binomial(self):
        assert linf(make_pseudo_binomial(6.0, 0.4),
                    make_binomial(6, 0.4)) < 1e-14

    def test_parameter_validation(self):
        with pytest.raises((ParameterError, ValueError)):
            make_binomial(5, 1.2)
        with pytest.raises((ParameterError, ValueError)):
            make_negative_binomial(-1.0, 0.5)


class TestCompoundBuilders:
    def test_m1_equals_convolution(self):
        pr = TargetParamsM1(n=8, p=0.35, lam=1.1)
        direct = make_compound_m1(pr)
        conv = convolve(make_binomial(8, 0.35), make_poisson(1.1))
        assert linf(direct, conv) < 1e-12

    def test_m1_high_p_fallback_is_stable(self):
        # the Panjer recursion alone diverges for p > 1/2
        pr = TargetParamsM1(n=13, p=0.8, lam=1.6)
        direct = make_compound_m1(pr)
        conv = convolve(make_binomial(13, 0.8), make_poisson(1.6))
        assert linf(direct, conv) < 1e-12

    def test_m2_equals_convolution(self):
        pr = TargetParamsM2(r=3.2, p_bar=0.55, lam=0.7)
        direct = make_compound_m2(pr)
        conv = convolve(make_negative_binomial(3.2, 0.55), make_poisson(0.7))
        assert linf(direct, conv) < 1e-12

    def test_signed_m2_has_unit_mass_and_negative_weights(self):
        pr = TargetParamsM2(r=1.0, p_bar=0.5, lam=-0.8)
        mu = make_compound_m2(pr)
        assert mu.total_mass == pytest.approx(1.0, abs=1e-9)
        assert np.any(mu.weights < 0.0)

    def test_signed_m2_cumulants(self):
        pr = TargetParamsM2(r=5.0, p_bar=0.4, lam=-0.3)
        gam = factorial_cumulants(make_compound_m2(pr))
        qb, pb = 0.6, 0.4
        assert gam.gamma1 == pytest.approx(5.0 * qb / pb - 0.3, rel=1e-8)
        assert gam.gamma2 == pytest.approx(5.0 * (qb / pb) ** 2, rel=1e-8)


class TestFunctionals:
    def test_tv_identical_is_zero(self):
        mu = make_binomial(6, 0.3)
        assert tv_distance(mu, mu) == 0.0

    def test_tv_disjoint_point_masses_is_one(self):
        assert tv_distance(point_mass(0), point_mass(3)) == pytest.approx(1.0)

    def test_tv_symmetry(self):
        a, b = make_binomial(5, 0.4), make_poisson(2.0)
        assert tv_distance(a, b) == pytest.approx(tv_distance(b, a))

    def test_smoothness_of_point_mass(self):
        assert smoothness_D(point_mass(0)) == pytest.approx(4.0)
        assert smoothness_D1(point_mass(0)) == pytest.approx(2.0)

    def test_smoothness_product_inequality(self):
        # D(X+Y) <= D1(X) * D1(Y), the submultiplicative chain
        a = make_binomial(4, 0.3)
        b = make_poisson(1.2)
        assert smoothness_D(convolve(a, b)) <= (smoothness_D1(a)
                                                * smoothness_D1(b) + 1e-12)

    def test_raw_moments_of_bernoulli(self):
        mu = make_binomial(1, 0.3)
        assert raw_moments(mu) == pytest.approx((0.3, 0.3, 0.3))


class TestFactorialCumulants:
    def test_poisson(self):
        gam = factorial_cumulants(make_poisson(2.3))
        assert gam.gamma1 == pytest.approx(2.3, rel=1e-10)
        assert gam.gamma2 == pytest.approx(0.0, abs=1e-9)
        assert gam.gamma3 == pytest.approx(0.0, abs=1e-8)

    def test_binomial(self):
        n, p = 11, 0.42
        gam = factorial_cumulants(make_binomial(n, p))
        assert gam.gamma1 == pytest.approx(n * p, rel=1e-10)
        assert gam.gamma2 == pytest.approx(-n * p**2, rel=1e-10)
        assert gam.gamma3 == pytest.approx(n * p**3, rel=1e-8)

    def test_negative_binomial(self):
        r, pbar = 4.0, 0.55
        t = (1 - pbar) / pbar
        gam = factorial_cumulants(make_negative_binomial(r, pbar))
        assert gam.gamma1 == pytest.approx(r * t, rel=1e-10)
        assert gam.gamma2 == pytest.approx(r * t**2, rel=1e-10)
        assert gam.gamma3 == pytest.approx(r * t**3, rel=1e-8)

    @given(n=st.integers(1, 15), p=st.floats(0.05, 0.9),
           lam=st.floats(0.05, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_additive_under_convolution(self, n, p, lam):
        a, b = make_binomial(n, p), make_poisson(lam)
        ga = factorial_cumulants(a)
        gb = factorial_cumulants(b)
        gc = factorial_cumulants(convolve(a, b))
        assert gc.gamma1 == pytest.approx(ga.gamma1 + gb.gamma1, rel=1e-8)
        assert gc.gamma2 == pytest.approx(ga.gamma2 + gb.gamma2,
                                          rel=1e-7, abs=1e-8)
        assert gc.gamma3 == pytest.approx(ga.gamma3 + gb.gamma3,
                                          rel=1e-6, abs=1e-7)


class TestSerialization:
    def test_round_trip(self):
        mu = make_binomial(4, 0.6)
        again = LatticeMeasure.from_dict(mu.to_dict())
        assert again.offset == mu.offset
        assert linf(mu, again) == 0.0
