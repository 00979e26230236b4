"""Shared fixtures for the acceptance suite.

Training runs at the reduced profile still take minutes each, so trained
networks and Monte Carlo prices are cached on disk under tests/_cache keyed
by a human-readable cell name. Delete the directory (or bump CACHE_VERSION)
after changing anything that affects training or simulation semantics.
"""

import json
import math
from pathlib import Path

import pytest

from eqrisk import presets
from eqrisk.erp import MarketSpec, Seeds, TrainConfig, desk_scale, train
from eqrisk.hedging import InstrumentSet, PayoffSpec
from eqrisk.io import load_network, save_network
from eqrisk.pricing import rn_price_put

CACHE_VERSION = 1
CACHE_DIR = Path(__file__).parent / "_cache" / f"v{CACHE_VERSION}"


def cached_network(key, config, market, payoff, instruments=None, v_tilde=None):
    CACHE_DIR.mkdir(parents=True, exist_ok=True)
    path = CACHE_DIR / f"{key}.ckpt"
    if path.exists():
        return load_network(path)
    net = train(config, market, payoff, instruments, v_tilde=v_tilde)
    save_network(net, path)
    return net


def cached_price(key, params, grid, strike, n_mc=1_000_000, seed=0):
    CACHE_DIR.mkdir(parents=True, exist_ok=True)
    path = CACHE_DIR / f"{key}.json"
    if path.exists():
        data = json.loads(path.read_text())
        return data["value"], data["std_error"]
    p = rn_price_put(params, grid, strike, n_mc=n_mc, seed=seed)
    path.write_text(json.dumps({"value": p.value, "std_error": p.std_error}))
    return p.value, p.std_error


def desk_interval_pair(key, market, strike, risk, v_bounds, instruments=None):
    """Short and long networks trained on the bisection interval at the
    reduced profile, sharing the short side's feature scaling."""
    instruments = instruments or InstrumentSet("stock_only")
    payoff = PayoffSpec(strike=strike)
    cfg_s = desk_scale(risk, "short", v0_mode="interval", v_bounds=v_bounds,
                       seeds=Seeds())
    cfg_l = desk_scale(risk, "long", v0_mode="interval",
                       v_bounds=(-v_bounds[1], -v_bounds[0]), seeds=Seeds().offset(17))
    net_s = cached_network(f"{key}_short", cfg_s, market, payoff, instruments)
    net_l = cached_network(f"{key}_long", cfg_l, market, payoff, instruments,
                           v_tilde=cfg_s.v_tilde)
    return net_s, net_l, cfg_s


def desk_fixed_pair(key, market, strike, risk, v0=0.0, instruments=None):
    """Short and long networks trained at a fixed initial capital (used for
    the translation-invariant measures, where the policy ignores V0)."""
    instruments = instruments or InstrumentSet("stock_only")
    payoff = PayoffSpec(strike=strike)
    cfg_s = desk_scale(risk, "short", v0_mode="fixed", v0=v0, seeds=Seeds())
    cfg_l = desk_scale(risk, "long", v0_mode="fixed", v0=-v0, seeds=Seeds().offset(17))
    net_s = cached_network(f"{key}_short", cfg_s, market, payoff, instruments)
    net_l = cached_network(f"{key}_long", cfg_l, market, payoff, instruments,
                           v_tilde=cfg_s.v_tilde)
    return net_s, net_l, cfg_s


@pytest.fixture(scope="session")
def rs_market():
    return MarketSpec(presets.rs_sp500(), presets.grid_short_put())


@pytest.fixture(scope="session")
def rs_test_batch(rs_market):
    return rs_market.simulate(100_000, Seeds().test_sim)


@pytest.fixture(scope="session")
def rs_c0q(rs_market):
    """Risk-neutral RS put prices per strike at 10^6 paths (disk-cached)."""
    out = {}
    for name, strike in presets.STRIKES.items():
        value, se = cached_price(f"rs_c0q_{name}", rs_market.params,
                                 rs_market.grid, strike)
        out[name] = (strike, value, se)
    return out


@pytest.fixture(scope="session")
def mjd_year_market():
    return MarketSpec(presets.mjd_one_year(), presets.grid_one_year(1))
