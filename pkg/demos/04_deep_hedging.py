"""Train a small deep-hedging policy and compare it to doing nothing.

A short ATM put under Black-Scholes dynamics, hedged daily with the stock.
The policy network sees (time to maturity, log-moneyness, normalized
portfolio value) and outputs the stock position. Scale is reduced so the
demo runs in about a minute.
"""

import numpy as np

from eqrisk import presets
from eqrisk.erp import MarketSpec, Seeds, TrainConfig, make_setup, residual_risk, train
from eqrisk.hedging import InstrumentSet, PayoffSpec, hedging_statistics, rollout
from eqrisk.neural import Network
from eqrisk.risk_measures import semi_lp_spec

market = MarketSpec(presets.bsm_sp500(), presets.grid_short_put())
payoff = PayoffSpec(strike=100.0)
v0 = 3.5  # close to the risk-neutral price

config = TrainConfig(
    risk=semi_lp_spec(2.0), side="short", v0_mode="fixed", v0=v0,
    n_train_paths=50_000, n_test_paths=50_000, epochs=8, seeds=Seeds(),
)

print("training a short-put policy (semi-L2 objective)...")
losses = []
net = train(config, market, payoff, callback=lambda e, l: losses.append(l))
print("epoch losses:", " ".join(f"{l:.4f}" for l in losses))

setup = make_setup(config, market, payoff, InstrumentSet("stock_only"))
test = market.simulate(config.n_test_paths, config.seeds.test_sim)

trained = rollout(net, test, v0, "short", setup)
idle_net = Network([np.zeros((1, setup.features.dim))], [np.zeros(1)])
idle = rollout(idle_net, test, v0, "short", setup)

print()
print(f"out-of-sample semi-L2 risk: trained {semi_lp_spec(2.0).evaluate(trained.pi):.4f}"
      f"  vs unhedged {semi_lp_spec(2.0).evaluate(idle.pi):.4f}")
print()
print(f"{'statistic':11s} {'trained':>9s} {'unhedged':>9s}")
for (label, a), (_, b) in zip(hedging_statistics(trained).as_rows(),
                              hedging_statistics(idle).as_rows()):
    print(f"{label:11s} {a:9.4f} {b:9.4f}")
