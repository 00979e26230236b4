"""Risk-neutral put prices across dynamics and strikes.

BSM and Merton jump-diffusion have closed forms; the regime-switching and
GARCH prices are Monte Carlo with reported standard errors.
"""

from eqrisk import presets
from eqrisk.pricing import rn_price_put

grid = presets.grid_short_put()
print(f"European puts, T = {grid.T:.4f}, r = {grid.r}, S0 = 100")
print()
print(f"{'model':8s} {'K':>5s} {'price':>8s} {'std err':>8s}  method")
for name in ("bsm", "mjd", "rs", "garch"):
    params = presets.dynamics_by_name(name)
    for label, strike in presets.STRIKES.items():
        p = rn_price_put(params, grid, strike, n_mc=100_000, seed=1)
        print(f"{name:8s} {strike:5.0f} {p.value:8.4f} {p.std_error:8.4f}  {p.method}")
    print()
