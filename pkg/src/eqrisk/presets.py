"""Default market calibrations and experiment grids.

Parameter values are the S&P 500 maximum-likelihood estimates used by the
simulation experiments; the one-year jump-diffusion and implied-volatility
calibrations drive the long-maturity option-hedge experiment.
"""

from __future__ import annotations

from .models import BSMParams, GarchParams, IVParams, MJDParams, RSParams, TimeGrid

__all__ = [
    "bsm_sp500",
    "garch_sp500",
    "rs_sp500",
    "mjd_sp500",
    "mjd_one_year",
    "iv_log_ar1",
    "grid_short_put",
    "grid_one_year",
    "STRIKES",
    "dynamics_by_name",
]

# OTM / ATM / ITM strikes for the S0 = 100 put experiments
STRIKES = {"OTM": 90.0, "ATM": 100.0, "ITM": 110.0}


def bsm_sp500() -> BSMParams:
    return BSMParams(mu=0.0892, sigma=0.1952)


def garch_sp500() -> GarchParams:
    return GarchParams(mu=2.871e-04, omega=1.795e-06, upsilon=0.0540,
                       gamma=0.6028, beta=0.9105)


def rs_sp500() -> RSParams:
    return RSParams(
        mu=(0.1804, -0.2682),
        sigma=(0.1193, 0.3328),
        Gamma=((0.9886, 0.0114), (0.0355, 0.9645)),
    )


def mjd_sp500() -> MJDParams:
    return MJDParams(nu=0.0875, sigma=0.1036, lam=92.3862, muJ=-0.0015, sigmaJ=0.0160)


def mjd_one_year() -> MJDParams:
    return MJDParams(nu=0.1111, sigma=0.1323, lam=0.25, muJ=-0.10, sigmaJ=0.10)


def iv_log_ar1() -> IVParams:
    import math

    return IVParams(kappa=0.15, theta=math.log(0.15), sigmaIV=0.06, rho=-0.6)


def grid_short_put() -> TimeGrid:
    """60 daily rebalances over T = 60/260, r = 2%."""
    return TimeGrid.make(N=60, r=0.02, days_per_year=260, days_per_period=1)


def grid_one_year(days_per_period: int = 1) -> TimeGrid:
    """One-year horizon at 252 days/year, r = 3%; rebalancing daily (1),
    monthly (21) or quarterly (63)."""
    if 252 % days_per_period:
        raise ValueError("days_per_period must divide 252")
    return TimeGrid.make(N=252 // days_per_period, r=0.03, days_per_year=252,
                         days_per_period=days_per_period)


def dynamics_by_name(name: str):
    table = {
        "bsm": bsm_sp500,
        "garch": garch_sp500,
        "rs": rs_sp500,
        "mjd": mjd_sp500,
        "mjd_one_year": mjd_one_year,
    }
    try:
        return table[name]()
    except KeyError:
        raise ValueError(f"unknown dynamics {name!r}; choose from {sorted(table)}") from None
