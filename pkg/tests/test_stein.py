"""Tests for Stein operators, the equation solver and the constants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compoundruns.measures import (TargetParamsM1, TargetParamsM2,
                                   make_binomial, make_negative_binomial,
                                   make_compound_m1, make_compound_m2)
from compoundruns.stein import (UnifiedOperator, CompoundOperator,
                                apply_unified, stein_identity_residual,
                                solve_stein_equation, budget_m1, budget_m2,
                                check_assumptions, delta_g_bound_simple,
                                delta_g_bound_perturbed, theta_constants,
                                InapplicableError)


TEST_FUNCTIONS = [
    ("const", lambda k: 1.0),
    ("linear", lambda k: float(k)),
    ("capped", lambda k: float(min(k, 10))),
    ("halfline3", lambda k: float(k <= 3)),
    ("halfline7", lambda k: float(k <= 7)),
]


class TestUnifiedOperator:
    def test_binomial_identity_for_constant_g(self):
        op = UnifiedOperator.binomial(7, 0.3)
        mu = make_binomial(7, 0.3)
        total = sum(w * apply_unified(op, lambda k: 1.0, int(k))
                    for k, w in zip(mu.support, mu.weights))
        assert abs(total) < 1e-10

    def test_negative_binomial_identity(self):
        op = UnifiedOperator.negative_binomial(3.0, 0.55)
        mu = make_negative_binomial(3.0, 0.55)
        for name, g in TEST_FUNCTIONS:
            total = sum(w * apply_unified(op, g, int(k))
                        for k, w in zip(mu.support, mu.weights))
            assert abs(total) < 1e-9, name


class TestCompoundIdentity:
    @pytest.mark.parametrize("pr", [
        TargetParamsM1(n=6, p=0.25, lam=0.8),
        TargetParamsM1(n=27, p=0.8, lam=2.4),
        TargetParamsM1(n=12, p=0.4, lam=-0.5),
    ])
    def test_m1(self, pr):
        op = CompoundOperator.from_m1(pr)
        mu = make_compound_m1(pr)
        for name, g in TEST_FUNCTIONS:
            assert stein_identity_residual(mu, op, g) < 1e-9, name

    @pytest.mark.parametrize("pr", [
        TargetParamsM2(r=3.0, p_bar=0.5, lam=0.4),
        TargetParamsM2(r=5.0, p_bar=0.4, lam=-0.3),
    ])
    def test_m2(self, pr):
        op = CompoundOperator.from_m2(pr)
        mu = make_compound_m2(pr)
        for name, g in TEST_FUNCTIONS:
            assert stein_identity_residual(mu, op, g) < 1e-9, name


class TestSolver:
    @pytest.mark.parametrize("pr,maker,op_maker", [
        (TargetParamsM1(n=10, p=0.3, lam=1.0), make_compound_m1,
         CompoundOperator.from_m1),
        (TargetParamsM1(n=27, p=0.8, lam=2.4), make_compound_m1,
         CompoundOperator.from_m1),
        (TargetParamsM2(r=3.0, p_bar=0.5, lam=0.4), make_compound_m2,
         CompoundOperator.from_m2),
        (TargetParamsM2(r=5.0, p_bar=0.4, lam=-0.3), make_compound_m2,
         CompoundOperator.from_m2),
    ])
    def test_residual_small(self, pr, maker, op_maker):
        target = maker(pr)
        op = op_maker(pr)
        for thresh in (0, 3, 10):
            sol = solve_stein_equation(op, target,
                                       lambda k, s=thresh: float(k <= s))
            assert sol.residual < 1e-9

    def test_constant_close_to_target_expectation(self):
        pr = TargetParamsM2(r=3.0, p_bar=0.5, lam=0.4)
        target = make_compound_m2(pr)
        op = CompoundOperator.from_m2(pr)
        sol = solve_stein_equation(op, target, lambda k: float(k <= 5))
        eh = float(target.weights[:6].sum())
        assert sol.constant == pytest.approx(eh, abs=1e-9)

    def test_solution_satisfies_equation_rowwise(self):
        pr = TargetParamsM1(n=9, p=0.35, lam=0.6)
        target = make_compound_m1(pr)
        op = CompoundOperator.from_m1(pr)
        sol = solve_stein_equation(op, target, lambda k: float(k <= 4))
        g = sol.as_function()
        lb = op.lam * op.beta
        for k in range(sol.support_max + 1):
            lhs = ((op.a + op.beta * k + lb) * g(k + 1)
                   - lb * g(k + 2) - k * g(k))
            rhs = float(k <= 4) - sol.constant
            assert lhs == pytest.approx(rhs, abs=1e-10)

    @given(n=st.integers(5, 25), p=st.floats(0.1, 0.6),
           lam=st.floats(0.1, 1.5), thresh=st.integers(0, 20))
    @settings(max_examples=20, deadline=None)
    def test_m1_delta_within_perturbed_bound(self, n, p, lam, thresh):
        pr = TargetParamsM1(n=n, p=p, lam=lam)
        budget = budget_m1(pr)
        if budget.margin <= 0.0:
            return
        sol = solve_stein_equation(CompoundOperator.from_m1(pr),
                                   make_compound_m1(pr),
                                   lambda k: float(k <= thresh))
        assert sol.max_delta() <= delta_g_bound_perturbed(budget) + 1e-9


class TestBudgetsAndConstants:
    def test_budget_m1_values(self):
        pr = TargetParamsM1(n=27, p=0.8, lam=2.4)
        b = budget_m1(pr)
        assert b.epsilon == pytest.approx(2.4 * 0.8 / 0.2, rel=1e-12)
        assert b.gamma == 30
        assert b.omega == pytest.approx(2.5)

    def test_budget_m2_values(self):
        pr = TargetParamsM2(r=3.0, p_bar=0.5, lam=0.4)
        b = budget_m2(pr)
        assert b.epsilon == pytest.approx(0.2)
        assert b.gamma == pytest.approx(1.7)
        assert b.omega == 2.0

    def test_check_assumptions_keys(self):
        out1 = check_assumptions(TargetParamsM1(n=10, p=0.3, lam=0.5))
        out2 = check_assumptions(TargetParamsM2(r=2.0, p_bar=0.6, lam=0.2))
        assert out1["h1_ok"] and out2["h2_ok"]

    def test_simple_bounds(self):
        assert delta_g_bound_simple("binomial", n=10, p=0.5) == \
            pytest.approx(0.4)
        assert delta_g_bound_simple("negative_binomial", r=4.0,
                                    p_bar=0.5) == pytest.approx(1.0)
        assert delta_g_bound_simple("pseudo_binomial", N=7.9,
                                    p=0.5) == pytest.approx(4.0 / 7.0)

    def test_theta_constants_m1(self):
        pr = TargetParamsM1(n=27, p=0.8, lam=2.4)
        tc = theta_constants(pr)
        assert tc.theta == pytest.approx(2.4 / (30 * 0.2), rel=1e-12)
        expect = 1.0 / ((1.0 - 2.0 * tc.theta) * 30 * 0.8)
        assert tc.big_theta == pytest.approx(expect, rel=1e-12)

    def test_theta_uses_absolute_lambda(self):
        tc = theta_constants(TargetParamsM2(r=5.0, p_bar=0.4, lam=-0.3))
        assert tc.theta > 0.0

    def test_theta_refuses_large_perturbation(self):
        with pytest.raises(InapplicableError):
            theta_constants(TargetParamsM1(n=3, p=0.5, lam=2.0))
        with pytest.raises(InapplicableError):
            theta_constants(TargetParamsM1(n=10, p=0.3, lam=0.0))
