"""End-to-end equal risk pricing of an OTM put, reduced scale.

Under a non-translation-invariant risk measure (semi-L2 here) the price
solves eps_short(V) = eps_long(-V). Both policies are trained once over the
search interval (initial capital drawn uniformly per SGD minibatch), then
bisection reuses the same two networks for every capital query.
"""

from eqrisk import presets
from eqrisk.erp import (
    BisectionConfig,
    MarketSpec,
    Seeds,
    TrainConfig,
    bisection_solve,
    make_setup,
    train,
)
from eqrisk.hedging import InstrumentSet, PayoffSpec
from eqrisk.pricing import rn_price_put
from eqrisk.risk_measures import semi_lp_spec

market = MarketSpec(presets.bsm_sp500(), presets.grid_short_put())
strike = 90.0
risk = semi_lp_spec(2.0)

c0q = rn_price_put(market.params, market.grid, strike).value
bis = BisectionConfig.around_rn_price(c0q)
print(f"risk-neutral price C0^Q = {c0q:.4f}; search interval "
      f"[{bis.v_low:.4f}, {bis.v_high:.4f}]")

common = dict(n_train_paths=50_000, n_test_paths=50_000, epochs=8)
cfg_short = TrainConfig(risk=risk, side="short", v0_mode="interval",
                        v_bounds=(bis.v_low, bis.v_high), seeds=Seeds(), **common)
cfg_long = TrainConfig(risk=risk, side="long", v0_mode="interval",
                       v_bounds=(-bis.v_high, -bis.v_low), seeds=Seeds().offset(17),
                       **common)

payoff = PayoffSpec(strike=strike)
print("training short policy...")
net_short = train(cfg_short, market, payoff)
print("training long policy...")
net_long = train(cfg_long, market, payoff, v_tilde=cfg_short.v_tilde)

setup = make_setup(cfg_short, market, payoff, InstrumentSet("stock_only"))
test = market.simulate(cfg_short.n_test_paths, cfg_short.seeds.test_sim)
sol = bisection_solve(net_long, net_short, bis, test, risk, setup)

print()
print("bisection trace (V, residual-risk gap):")
for v, gap in sol.iterations:
    print(f"  V = {v:.4f}   gap = {gap:+.4f}")
print()
print(f"equal risk price C0* = {sol.c0_star:.4f}  "
      f"(premium over C0^Q: {sol.c0_star / c0q - 1:+.1%})")
print(f"residual risks at C0*: short {sol.eps_short:.4f}, long {sol.eps_long:.4f}")
