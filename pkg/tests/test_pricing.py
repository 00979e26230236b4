import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from eqrisk import presets
from eqrisk.models import BSMParams, MJDParams, RSParams, TimeGrid
from eqrisk.pricing import (
    QuotedOption,
    RnPrice,
    bs_call,
    bs_price,
    bs_put,
    norm_cdf,
    q_simulate,
    rn_price_bsm_put,
    rn_price_garch_put,
    rn_price_mjd_put,
    rn_price_put,
    rn_price_rs_put,
)


def lognormal_put_quadrature(S0, K, sigma, T, r):
    """Independent oracle: e^{-rT} E[(K - S_T)^+] by numerical integration
    over the terminal lognormal density."""
    m = math.log(S0) + (r - 0.5 * sigma**2) * T
    s = sigma * math.sqrt(T)

    def integrand(x):
        return max(K - math.exp(x), 0.0) * stats.norm.pdf(x, loc=m, scale=s)

    val, _ = integrate.quad(integrand, m - 12 * s, math.log(K))
    return math.exp(-r * T) * val


class TestBlackScholes:
    def test_norm_cdf_values(self):
        assert norm_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
        assert norm_cdf(1.96) == pytest.approx(stats.norm.cdf(1.96), abs=1e-14)
        np.testing.assert_allclose(norm_cdf(np.array([-1.0, 2.0])),
                                   stats.norm.cdf([-1.0, 2.0]), atol=1e-14)

    @pytest.mark.parametrize("K", [90.0, 100.0, 110.0])
    def test_put_matches_quadrature(self, K):
        got = float(bs_put(0.1952, 60 / 260, 100.0, K, 0.02))
        want = lognormal_put_quadrature(100.0, K, 0.1952, 60 / 260, 0.02)
        assert got == pytest.approx(want, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(
        iv=st.floats(0.05, 0.8),
        ttm=st.floats(0.01, 2.0),
        strike=st.floats(50.0, 150.0),
        r=st.floats(0.0, 0.1),
    )
    def test_put_call_parity(self, iv, ttm, strike, r):
        c = float(bs_call(iv, ttm, 100.0, strike, r))
        p = float(bs_put(iv, ttm, 100.0, strike, r))
        assert c - p == pytest.approx(100.0 - strike * math.exp(-r * ttm), abs=1e-9)

    def test_put_monotone_in_strike(self):
        ks = np.linspace(60, 140, 30)
        prices = bs_put(0.2, 0.5, 100.0, ks, 0.02)
        assert (np.diff(prices) > 0).all()

    def test_bs_price_dispatch(self):
        opt = QuotedOption(kind="call", strike=100.0, time_to_maturity=0.1,
                           iv=0.2, spot=100.0, r=0.02)
        assert bs_price(opt) == pytest.approx(float(bs_call(0.2, 0.1, 100.0, 100.0, 0.02)))

    def test_quoted_option_validation(self):
        with pytest.raises(ValueError):
            QuotedOption(kind="straddle", strike=100.0, time_to_maturity=0.1,
                         iv=0.2, spot=100.0, r=0.02)
        with pytest.raises(ValueError):
            QuotedOption(kind="put", strike=100.0, time_to_maturity=-0.1,
                         iv=0.2, spot=100.0, r=0.02)


class TestRnPriceType:
    def test_rejects_negative_values(self):
        with pytest.raises(ValueError):
            RnPrice(value=-1.0, std_error=0.0, method="closed_form", n_paths=0)


class TestBsmPricer:
    def test_equals_closed_form(self):
        grid = presets.grid_short_put()
        got = rn_price_bsm_put(presets.bsm_sp500(), grid, 100.0)
        assert got.value == pytest.approx(float(bs_put(0.1952, grid.T, 100.0, 100.0, grid.r)))
        assert got.std_error == 0.0

    def test_drift_is_irrelevant_under_q(self):
        grid = presets.grid_short_put()
        a = rn_price_bsm_put(presets.bsm_sp500(), grid, 95.0)
        b = rn_price_bsm_put(replace(presets.bsm_sp500(), mu=0.5), grid, 95.0)
        assert a.value == b.value


class TestMjdPricer:
    def test_degenerates_to_bsm_without_jumps(self):
        grid = presets.grid_short_put()
        params = MJDParams(nu=0.08, sigma=0.18, lam=1e-14, muJ=-0.1, sigmaJ=0.1)
        got = rn_price_mjd_put(params, grid, 100.0)
        want = float(bs_put(0.18, grid.T, 100.0, 100.0, grid.r))
        assert got.value == pytest.approx(want, abs=1e-9)

    def test_series_matches_monte_carlo(self):
        grid = presets.grid_short_put()
        params = presets.mjd_sp500()
        series = rn_price_mjd_put(params, grid, 100.0)
        batch = q_simulate(params, grid, 200_000, seed=21)
        disc = math.exp(-grid.r * grid.T)
        payoff = disc * np.maximum(100.0 - batch.spots[:, -1], 0.0)
        se = payoff.std(ddof=1) / math.sqrt(payoff.size)
        assert series.value == pytest.approx(payoff.mean(), abs=4 * se)

    def test_more_jump_risk_raises_otm_price(self):
        grid = presets.grid_short_put()
        base = presets.mjd_sp500()
        heavier = replace(base, lam=2 * base.lam)
        assert rn_price_mjd_put(heavier, grid, 90.0).value > rn_price_mjd_put(base, grid, 90.0).value


class TestRsPricer:
    def test_identical_regimes_reduce_to_bsm(self):
        grid = presets.grid_short_put()
        params = RSParams(mu=(0.08, 0.08), sigma=(0.2, 0.2),
                          Gamma=((0.9, 0.1), (0.1, 0.9)))
        got = rn_price_rs_put(params, grid, 100.0, n_mc=100_000, seed=3)
        want = float(bs_put(0.2, grid.T, 100.0, 100.0, grid.r))
        assert got.value == pytest.approx(want, abs=4 * got.std_error)

    def test_rejects_small_sample(self):
        with pytest.raises(ValueError):
            rn_price_rs_put(presets.rs_sp500(), presets.grid_short_put(), 100.0, n_mc=100)


class TestGarchPricer:
    def test_rejects_small_sample(self):
        with pytest.raises(ValueError):
            rn_price_garch_put(presets.garch_sp500(), presets.grid_short_put(), 100.0, n_mc=100)

    def test_first_day_conditional_martingale(self):
        grid = presets.grid_short_put()
        batch = q_simulate(presets.garch_sp500(), grid, 200_000, seed=4)
        growth = np.exp(batch.log_returns[:, 0])
        se = growth.std(ddof=1) / math.sqrt(growth.size)
        assert growth.mean() == pytest.approx(math.exp(grid.r * grid.day_delta), abs=4 * se)


class TestQMartingale:
    """Discounted terminal spot has mean S0 under every Q-simulator."""

    @pytest.mark.parametrize("name", ["bsm", "garch", "rs", "mjd"])
    def test_discounted_mean_is_s0(self, name):
        grid = presets.grid_short_put()
        params = presets.dynamics_by_name(name)
        batch = q_simulate(params, grid, 100_000, seed=31)
        x = math.exp(-grid.r * grid.T) * batch.spots[:, -1]
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert x.mean() == pytest.approx(100.0, abs=4 * se)


def test_rn_price_put_dispatch():
    grid = presets.grid_short_put()
    assert rn_price_put(presets.bsm_sp500(), grid, 90.0).method == "closed_form"
    assert rn_price_put(presets.mjd_sp500(), grid, 90.0).method == "closed_form"
    with pytest.raises(TypeError):
        rn_price_put(object(), grid, 90.0)


def test_q_simulate_dispatch_rejects_unknown_type():
    with pytest.raises(TypeError):
        q_simulate(object(), presets.grid_short_put(), 10, seed=0)
