"""Physical-measure market simulators.

All simulators operate on a daily step grid and return an immutable
:class:`PathBatch`. Log-returns, beginning-of-day underlying prices and the
per-day auxiliary state (regime predictive probabilities, GARCH volatility)
are stored per path. Latent regime paths are kept in a diagnostics channel
and are never part of the auxiliary state fed to trading policies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "TimeGrid",
    "BSMParams",
    "GarchParams",
    "RSParams",
    "MJDParams",
    "IVParams",
    "PathBatch",
    "FilterUnderflowError",
    "simulate_bsm",
    "simulate_garch",
    "simulate_mjd",
    "simulate_rs",
    "filter_step",
    "simulate_iv",
    "stationary_distribution",
    "attach_iv",
]

# Purpose tags mixed into the RNG seed so that simulation streams used for
# different purposes (training set, test set, pricing) never overlap.
_PURPOSE_CODES = {
    "simulate": 0x51,
    "jumps": 0x52,
    "regimes": 0x53,
    "iv": 0x54,
}


def _rng(seed: int, purpose: str) -> np.random.Generator:
    # Philox is counter-based, so streams keyed on (seed, purpose) are
    # independent and reproducible regardless of draw order elsewhere.
    return np.random.Generator(
        np.random.Philox(seed=np.random.SeedSequence((int(seed), _PURPOSE_CODES[purpose])))
    )


class FilterUnderflowError(ArithmeticError):
    """All regime densities underflowed; the filter update is undefined."""


def _check_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name}: non-finite parameter {v!r}")


@dataclass(frozen=True)
class TimeGrid:
    """Rebalancing grid: N periods of length delta over T years.

    Simulation always happens on the daily sub-grid with step
    ``day_delta = T / n_days``; for daily rebalancing (days_per_period=1)
    the two grids coincide.
    """

    N: int
    delta: float
    T: float
    r: float
    days_per_year: int = 260
    days_per_period: int = 1

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.days_per_period < 1:
            raise ValueError("days_per_period must be >= 1")
        _check_finite("TimeGrid", self.delta, self.T, self.r)
        if not math.isclose(self.T, self.N * self.delta, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("T must equal N * delta")

    @classmethod
    def make(cls, N: int, r: float, days_per_year: int = 260, days_per_period: int = 1) -> "TimeGrid":
        delta = days_per_period / days_per_year
        return cls(N=N, delta=delta, T=N * delta, r=r,
                   days_per_year=days_per_year, days_per_period=days_per_period)

    @property
    def n_days(self) -> int:
        return self.N * self.days_per_period

    @property
    def day_delta(self) -> float:
        return self.T / self.n_days

    def daily(self) -> "TimeGrid":
        """The same horizon rebalanced daily."""
        if self.days_per_period == 1:
            return self
        return TimeGrid.make(self.n_days, self.r, self.days_per_year, 1)


@dataclass(frozen=True)
class BSMParams:
    mu: float
    sigma: float
    S0: float = 100.0

    def __post_init__(self):
        _check_finite("BSMParams", self.mu, self.sigma, self.S0)
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.S0 <= 0:
            raise ValueError("S0 must be > 0")


@dataclass(frozen=True)
class GarchParams:
    """GJR-GARCH with daily parameterization."""

    mu: float
    omega: float
    upsilon: float
    gamma: float
    beta: float
    sigma1_sq: float | None = None
    S0: float = 100.0

    def __post_init__(self):
        _check_finite("GarchParams", self.mu, self.omega, self.upsilon, self.gamma, self.beta)
        if min(self.omega, self.upsilon, self.beta) <= 0:
            raise ValueError("omega, upsilon, beta must be > 0")
        if self.sigma1_sq is None and not self.is_stationary:
            raise ValueError("non-stationary parameters require an explicit sigma1_sq")
        if self.sigma1_sq is not None and self.sigma1_sq <= 0:
            raise ValueError("sigma1_sq must be > 0")
        if self.S0 <= 0:
            raise ValueError("S0 must be > 0")

    @property
    def is_stationary(self) -> bool:
        return self.upsilon * (1.0 + self.gamma**2) + self.beta < 1.0

    @property
    def stationary_variance(self) -> float:
        if not self.is_stationary:
            raise ValueError("stationary variance undefined for non-stationary parameters")
        return self.omega / (1.0 - self.upsilon * (1.0 + self.gamma**2) - self.beta)

    def initial_variance(self) -> float:
        return self.sigma1_sq if self.sigma1_sq is not None else self.stationary_variance


@dataclass(frozen=True)
class RSParams:
    """Regime-switching lognormal model; mu/sigma are annual, per regime."""

    mu: tuple[float, ...]
    sigma: tuple[float, ...]
    Gamma: tuple[tuple[float, ...], ...]
    xi0: tuple[float, ...] | None = None
    S0: float = 100.0

    def __post_init__(self):
        H = len(self.mu)
        if H < 1 or len(self.sigma) != H:
            raise ValueError("mu and sigma must have the same positive length")
        if any(s <= 0 for s in self.sigma):
            raise ValueError("regime volatilities must be > 0")
        G = np.asarray(self.Gamma, dtype=float)
        if G.shape != (H, H):
            raise ValueError("Gamma must be HxH")
        if (G < 0).any() or not np.allclose(G.sum(axis=1), 1.0, atol=1e-10):
            raise ValueError("Gamma rows must be nonnegative and sum to 1")
        if self.xi0 is not None:
            x = np.asarray(self.xi0, dtype=float)
            if x.shape != (H,) or (x < 0).any() or not math.isclose(x.sum(), 1.0, abs_tol=1e-10):
                raise ValueError("xi0 must be a probability vector of length H")
        if self.S0 <= 0:
            raise ValueError("S0 must be > 0")

    @property
    def H(self) -> int:
        return len(self.mu)

    def transition_matrix(self) -> np.ndarray:
        return np.asarray(self.Gamma, dtype=float)

    def initial_probabilities(self) -> np.ndarray:
        if self.xi0 is not None:
            return np.asarray(self.xi0, dtype=float)
        return stationary_distribution(self.transition_matrix())


@dataclass(frozen=True)
class MJDParams:
    nu: float
    sigma: float
    lam: float
    muJ: float
    sigmaJ: float
    S0: float = 100.0

    def __post_init__(self):
        _check_finite("MJDParams", self.nu, self.sigma, self.lam, self.muJ, self.sigmaJ)
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.sigmaJ < 0:
            raise ValueError("sigmaJ must be >= 0")
        if self.S0 <= 0:
            raise ValueError("S0 must be > 0")

    @property
    def jump_compensator(self) -> float:
        """lambda * (E[e^zeta] - 1), the drift adjustment for jumps."""
        return self.lam * (math.exp(self.muJ + 0.5 * self.sigmaJ**2) - 1.0)


@dataclass(frozen=True)
class IVParams:
    kappa: float
    theta: float
    sigmaIV: float
    rho: float

    def __post_init__(self):
        _check_finite("IVParams", self.kappa, self.theta, self.sigmaIV, self.rho)
        if self.sigmaIV < 0:
            raise ValueError("sigmaIV must be >= 0")
        if abs(self.rho) > 1:
            raise ValueError("|rho| must be <= 1")

    @property
    def iv0(self) -> float:
        return math.exp(self.theta)


@dataclass(frozen=True)
class PathBatch:
    """Simulated market scenarios on a daily grid.

    ``spots[:, n]`` is the beginning-of-day underlying price S_n^(0,b);
    end-of-period prices follow from stock continuity, S_n^(0,e) =
    spots[:, n+1]. ``state[:, n, :]`` is the auxiliary state I_n available
    at time t_n (empty for BSM/MJD).
    """

    log_returns: np.ndarray          # (P, n_days)
    spots: np.ndarray                # (P, n_days + 1)
    state: np.ndarray                # (P, n_days, k), k >= 0
    innovations: np.ndarray | None = None   # (P, n_days) daily Gaussian shocks
    regimes: np.ndarray | None = None        # (P, n_days) latent h_n, diagnostics only
    iv: np.ndarray | None = None             # (P, n_days + 1) implied volatility path

    def __post_init__(self):
        for name in ("log_returns", "spots", "state", "innovations", "regimes", "iv"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)
        P, n = self.log_returns.shape
        if self.spots.shape != (P, n + 1):
            raise ValueError("spots shape inconsistent with log_returns")
        if self.state.shape[:2] != (P, n):
            raise ValueError("state shape inconsistent with log_returns")
        if (self.spots <= 0).any():
            raise ValueError("all prices must be strictly positive")

    @property
    def n_paths(self) -> int:
        return self.log_returns.shape[0]

    @property
    def n_steps(self) -> int:
        return self.log_returns.shape[1]

    @property
    def state_dim(self) -> int:
        return self.state.shape[2]

    def subset(self, idx: np.ndarray) -> "PathBatch":
        return PathBatch(
            log_returns=self.log_returns[idx].copy(),
            spots=self.spots[idx].copy(),
            state=self.state[idx].copy(),
            innovations=None if self.innovations is None else self.innovations[idx].copy(),
            regimes=None if self.regimes is None else self.regimes[idx].copy(),
            iv=None if self.iv is None else self.iv[idx].copy(),
        )


def _spots_from_returns(S0: float, y: np.ndarray) -> np.ndarray:
    P, n = y.shape
    spots = np.empty((P, n + 1))
    spots[:, 0] = S0
    np.exp(np.cumsum(y, axis=1), out=spots[:, 1:])
    spots[:, 1:] *= S0
    return spots


def _empty_state(P: int, n: int) -> np.ndarray:
    return np.zeros((P, n, 0))


def simulate_bsm(params: BSMParams, grid: TimeGrid, n_paths: int, seed: int) -> PathBatch:
    """Iid Gaussian log-returns with annual drift mu and volatility sigma."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    dt = grid.day_delta
    eps = _rng(seed, "simulate").standard_normal((n_paths, grid.n_days))
    y = (params.mu - 0.5 * params.sigma**2) * dt + params.sigma * math.sqrt(dt) * eps
    return PathBatch(
        log_returns=y,
        spots=_spots_from_returns(params.S0, y),
        state=_empty_state(n_paths, grid.n_days),
        innovations=eps,
    )


def simulate_garch(params: GarchParams, grid: TimeGrid, n_paths: int, seed: int) -> PathBatch:
    """GJR-GARCH daily log-returns; I_n is the next-day volatility."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    n = grid.n_days
    eps = _rng(seed, "simulate").standard_normal((n_paths, n))
    y = np.empty((n_paths, n))
    state = np.empty((n_paths, n, 1))
    var = np.full(n_paths, params.initial_variance())
    for j in range(n):
        sig = np.sqrt(var)
        state[:, j, 0] = sig
        e = eps[:, j]
        y[:, j] = params.mu + sig * e
        var = params.omega + params.upsilon * var * (np.abs(e) - params.gamma * e) ** 2 + params.beta * var
    return PathBatch(
        log_returns=y,
        spots=_spots_from_returns(params.S0, y),
        state=state,
        innovations=eps,
    )


def simulate_mjd(params: MJDParams, grid: TimeGrid, n_paths: int, seed: int) -> PathBatch:
    """Merton jump-diffusion log-returns.

    The per-day jump contribution is sampled by drawing the jump count
    K ~ Poisson(lambda * dt) and then one Normal(K*muJ, K*sigmaJ^2)
    aggregate, which is exact in law.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    dt = grid.day_delta
    n = grid.n_days
    eps = _rng(seed, "simulate").standard_normal((n_paths, n))
    jrng = _rng(seed, "jumps")
    counts = jrng.poisson(params.lam * dt, size=(n_paths, n))
    z = jrng.standard_normal((n_paths, n))
    jumps = counts * params.muJ + np.sqrt(counts) * params.sigmaJ * z
    drift = (params.nu - params.jump_compensator - 0.5 * params.sigma**2) * dt
    y = drift + params.sigma * math.sqrt(dt) * eps + jumps
    return PathBatch(
        log_returns=y,
        spots=_spots_from_returns(params.S0, y),
        state=_empty_state(n_paths, n),
        innovations=eps,
    )


def stationary_distribution(Gamma: np.ndarray) -> np.ndarray:
    """Unique row vector nu with nu @ Gamma = nu and sum(nu) = 1."""
    Gamma = np.asarray(Gamma, dtype=float)
    vals, vecs = np.linalg.eig(Gamma.T)
    close = np.isclose(vals, 1.0, atol=1e-8)
    if close.sum() != 1:
        raise ValueError("transition matrix does not have a unique stationary distribution")
    v = np.real(vecs[:, close.argmax()])
    v = np.abs(v)
    return v / v.sum()


def _log_regime_densities(mu: np.ndarray, sigma: np.ndarray, y: np.ndarray, delta: float) -> np.ndarray:
    """log phi_i(y) for each regime; y is (P,), output (P, H)."""
    m = mu * delta
    s2 = sigma**2 * delta
    z = (y[:, None] - m[None, :]) ** 2 / s2[None, :]
    return -0.5 * (z + np.log(2.0 * math.pi * s2)[None, :])


def filter_step(params: RSParams, xi_n: np.ndarray, y_next: np.ndarray | float,
                delta: float) -> np.ndarray:
    """One step of the regime predictive-probability recursion.

    xi_{n+1,j} = sum_i Gamma[i,j] phi_i(y) xi_{n,i} / sum_i phi_i(y) xi_{n,i}
    with phi_i the Normal(mu_i*delta, sigma_i^2*delta) density. Densities are
    evaluated in log-space with max-subtraction so extreme returns do not
    underflow. Accepts a single probability vector or a (P, H) batch.
    """
    xi = np.atleast_2d(np.asarray(xi_n, dtype=float))
    y = np.atleast_1d(np.asarray(y_next, dtype=float))
    mu = np.asarray(params.mu)
    sigma = np.asarray(params.sigma)
    logphi = _log_regime_densities(mu, sigma, y, delta)
    logphi = logphi - logphi.max(axis=1, keepdims=True)
    w = np.exp(logphi) * xi                     # (P, H)
    denom = w.sum(axis=1)
    if (denom <= 0).any() or not np.isfinite(denom).all():
        raise FilterUnderflowError("all regime densities underflowed")
    out = (w @ params.transition_matrix()) / denom[:, None]
    if np.isscalar(y_next) or np.ndim(y_next) == 0:
        return out[0]
    return out


def _simulate_rs_core(params: RSParams, grid: TimeGrid, n_paths: int, seed: int,
                      drift: np.ndarray, h0: int | None = None) -> PathBatch:
    n = grid.n_days
    dt = grid.day_delta
    mu = np.asarray(params.mu)
    sigma = np.asarray(params.sigma)
    G = params.transition_matrix()
    cumG = np.cumsum(G, axis=1)

    eps = _rng(seed, "simulate").standard_normal((n_paths, n))
    u = _rng(seed, "regimes").random((n_paths, n + 1))

    xi0 = params.initial_probabilities()
    if h0 is None:
        h = np.searchsorted(np.cumsum(xi0), u[:, 0])
    else:
        h = np.full(n_paths, int(h0))
    h = np.clip(h, 0, params.H - 1)

    y = np.empty((n_paths, n))
    state = np.empty((n_paths, n, params.H))
    regimes = np.empty((n_paths, n), dtype=np.int64)
    xi = np.tile(xi0, (n_paths, 1))
    filt = replace(params, mu=tuple(drift / dt), xi0=None)

    for j in range(n):
        state[:, j, :] = xi
        regimes[:, j] = h
        y[:, j] = drift[h] + sigma[h] * math.sqrt(dt) * eps[:, j]
        xi = filter_step(filt, xi, y[:, j], dt)
        rows = cumG[h]
        h = (u[:, j + 1][:, None] > rows).sum(axis=1)
        h = np.clip(h, 0, params.H - 1)

    return PathBatch(
        log_returns=y,
        spots=_spots_from_returns(params.S0, y),
        state=state,
        innovations=eps,
        regimes=regimes,
    )


def simulate_rs(params: RSParams, grid: TimeGrid, n_paths: int, seed: int) -> PathBatch:
    """Regime-switching log-returns with the predictive-probability filter.

    h_0 is drawn from the stationary distribution (or xi0 when given);
    I_n = xi_n. The latent regime path is recorded in the diagnostics
    channel only.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    dt = grid.day_delta
    drift = np.asarray(params.mu) * dt
    return _simulate_rs_core(params, grid, n_paths, seed, drift=drift)


def simulate_iv(params: IVParams, n_days: int, return_innovations: np.ndarray,
                seed: int) -> np.ndarray:
    """Log-AR(1) implied volatility path correlated with return shocks.

    log IV_{n+1} = log IV_n + kappa*(theta - log IV_n) + sigmaIV * Z_{n+1}
    with Z = rho*eps + sqrt(1-rho^2)*W and log IV_0 = theta. Returns the
    (P, n_days+1) IV array.
    """
    eps = np.asarray(return_innovations, dtype=float)
    if eps.ndim == 1:
        eps = eps[None, :]
    if eps.shape[1] != n_days:
        raise ValueError("return_innovations length must equal n_days")
    w = _rng(seed, "iv").standard_normal(eps.shape)
    z = params.rho * eps + math.sqrt(1.0 - params.rho**2) * w
    logiv = np.empty((eps.shape[0], n_days + 1))
    logiv[:, 0] = params.theta
    for j in range(n_days):
        logiv[:, j + 1] = logiv[:, j] + params.kappa * (params.theta - logiv[:, j]) + params.sigmaIV * z[:, j]
    return np.exp(logiv)


def simulate(params, grid: TimeGrid, n_paths: int, seed: int) -> PathBatch:
    """Physical-measure simulation dispatched on the dynamics type."""
    if isinstance(params, BSMParams):
        return simulate_bsm(params, grid, n_paths, seed)
    if isinstance(params, GarchParams):
        return simulate_garch(params, grid, n_paths, seed)
    if isinstance(params, MJDParams):
        return simulate_mjd(params, grid, n_paths, seed)
    if isinstance(params, RSParams):
        return simulate_rs(params, grid, n_paths, seed)
    raise TypeError(f"unsupported dynamics {type(params).__name__}")


def attach_iv(batch: PathBatch, params: IVParams, seed: int) -> PathBatch:
    """Return a copy of the batch carrying a simulated IV path driven by the
    batch's own daily return innovations."""
    if batch.innovations is None:
        raise ValueError("batch has no stored return innovations")
    iv = simulate_iv(params, batch.n_steps, batch.innovations, seed)
    return PathBatch(
        log_returns=batch.log_returns.copy(),
        spots=batch.spots.copy(),
        state=batch.state.copy(),
        innovations=batch.innovations.copy(),
        regimes=None if batch.regimes is None else batch.regimes.copy(),
        iv=iv,
    )
