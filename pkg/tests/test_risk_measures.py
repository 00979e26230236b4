import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from eqrisk.risk_measures import (
    TAIL_LEVELS,
    RiskMeasureSpec,
    cvar_hat,
    cvar_spec,
    semi_lp,
    semi_lp_spec,
    stats_suite,
    var_hat,
)

samples = hnp.arrays(
    dtype=float,
    shape=st.integers(2, 200),
    elements=st.floats(-100.0, 100.0, allow_nan=False),
)


def brute_force_var(x, alpha):
    """Sort-based order statistic, plain Python."""
    xs = sorted(float(v) for v in x)
    k = math.ceil(alpha * len(xs))
    return xs[k - 1]


def brute_force_cvar(x, alpha):
    v = brute_force_var(x, alpha)
    tail = sum(max(float(e) - v, 0.0) for e in x)
    return v + tail / ((1.0 - alpha) * len(x))


class TestHandValues:
    def test_semi_l2_hand_value(self):
        assert semi_lp(np.array([1.0, -1.0, 2.0]), 2.0) == pytest.approx(math.sqrt(5 / 3))

    def test_semi_lp_ignores_losses_below_zero(self):
        assert semi_lp(np.array([-5.0, -1.0]), 2.0) == 0.0

    def test_var_is_order_statistic(self):
        x = np.array([3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0, 3.5, 7.0, 0.1])
        # ceil(0.9 * 10) = 9th ascending value
        assert var_hat(x, 0.90) == 7.0
        assert var_hat(x, 0.95) == 9.0

    def test_cvar_hand_value(self):
        x = np.arange(1.0, 11.0)
        # VaR_0.8 = 8, excess = 1 + 2, CVaR = 8 + 3 / (0.2 * 10)
        assert cvar_hat(x, 0.8) == pytest.approx(9.5)


class TestBruteForceOracles:
    def test_var_cvar_match_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = rng.integers(2, 500)
            x = rng.standard_normal(n) * rng.uniform(0.1, 10)
            alpha = rng.uniform(0.5, 0.99)
            assert var_hat(x, alpha) == pytest.approx(brute_force_var(x, alpha), abs=1e-12)
            assert cvar_hat(x, alpha) == pytest.approx(brute_force_cvar(x, alpha), abs=1e-12)

    def test_semi_lp_matches_direct_evaluation(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            x = rng.standard_normal(rng.integers(2, 500))
            p = rng.uniform(1.0, 12.0)
            direct = (np.sum(np.maximum(x, 0.0) ** p) / x.size) ** (1.0 / p)
            assert semi_lp(x, p) == pytest.approx(direct, abs=1e-12)


class TestProperties:
    @settings(max_examples=100, deadline=None)
    @given(x=samples, lam=st.floats(0.01, 50.0))
    def test_positive_homogeneity(self, x, lam):
        assert semi_lp(lam * x, 2.0) == pytest.approx(lam * semi_lp(x, 2.0), rel=1e-9, abs=1e-9)
        assert cvar_hat(lam * x, 0.9) == pytest.approx(lam * cvar_hat(x, 0.9), rel=1e-9, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(x=samples, c=st.floats(-50.0, 50.0))
    def test_cvar_translation_equivariance(self, x, c):
        assert cvar_hat(x + c, 0.9) == pytest.approx(cvar_hat(x, 0.9) + c, abs=1e-9)

    def test_semi_lp_translation_counterexample(self):
        # stored counterexample: rho(X + 1) != rho(X) + 1
        x = np.array([1.0, -1.0])
        lhs = semi_lp(x + 1.0, 2.0)
        rhs = semi_lp(x, 2.0) + 1.0
        assert lhs == pytest.approx(math.sqrt(2.0))
        assert abs(lhs - rhs) > 0.29

    @settings(max_examples=100, deadline=None)
    @given(x=samples)
    def test_cvar_dominates_var_and_mean(self, x):
        assert cvar_hat(x, 0.9) >= var_hat(x, 0.9) - 1e-12
        assert cvar_hat(x, 0.9) >= x.mean() - 1e-9

    @settings(max_examples=100, deadline=None)
    @given(x=samples)
    def test_monotonicity(self, x):
        y = x + np.abs(np.sin(x))  # pointwise >= x
        assert semi_lp(y, 3.0) >= semi_lp(x, 3.0) - 1e-9
        assert cvar_hat(y, 0.9) >= cvar_hat(x, 0.9) - 1e-9


class TestNumericalStability:
    def test_large_p_large_values(self):
        x = np.array([1e10, 5e9, -3e9])
        out = semi_lp(x, 100.0)
        assert np.isfinite(out)
        assert out == pytest.approx(1e10 * (1 / 3) ** 0.01, rel=1e-9)

    def test_p_below_one_warns(self):
        with pytest.warns(UserWarning):
            semi_lp(np.array([1.0, 2.0]), 0.5)

    @pytest.mark.parametrize("bad", [np.array([]), np.array([1.0, np.nan]), np.array([np.inf])])
    def test_invalid_samples_rejected(self, bad):
        with pytest.raises(ValueError):
            semi_lp(bad, 2.0)
        with pytest.raises(ValueError):
            cvar_hat(bad, 0.9)


class TestSpec:
    def test_exactly_one_parameter(self):
        with pytest.raises(ValueError):
            RiskMeasureSpec(kind="semi_lp", p=2.0, alpha=0.9)
        with pytest.raises(ValueError):
            RiskMeasureSpec(kind="cvar")
        with pytest.raises(ValueError):
            RiskMeasureSpec(kind="entropy", p=2.0)

    def test_translation_invariance_flag(self):
        assert cvar_spec(0.95).translation_invariant
        assert not semi_lp_spec(2.0).translation_invariant

    def test_evaluate_dispatch(self):
        x = np.array([1.0, -2.0, 3.0])
        assert semi_lp_spec(2.0).evaluate(x) == semi_lp(x, 2.0)
        assert cvar_spec(0.9).evaluate(x) == cvar_hat(x, 0.9)

    def test_labels(self):
        assert semi_lp_spec(2.0).label() == "semi-L2"
        assert cvar_spec(0.95).label() == "CVaR0.95"


class TestStatsSuite:
    def test_consistency_with_definitions(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal(5000)
        s = stats_suite(x)
        assert s.mean == pytest.approx(x.mean())
        assert s.mse == pytest.approx(np.mean(x**2))
        assert s.smse == pytest.approx(np.mean(np.maximum(x, 0.0) ** 2))
        for a in TAIL_LEVELS:
            assert s.var[a] == var_hat(x, a)
            assert s.cvar[a] == cvar_hat(x, a)

    def test_as_rows_layout(self):
        s = stats_suite(np.array([1.0, -1.0, 0.5]))
        labels = [r[0] for r in s.as_rows()]
        assert labels[0] == "Mean"
        assert labels[-2:] == ["SMSE", "MSE"]
        assert len(labels) == 3 + 2 * len(TAIL_LEVELS)
