"""Self-financing hedging episodes.

A rollout maps (policy network, simulated paths, initial capital, side) to
per-path terminal hedging errors. Instruments are either the underlying stock
or a pair of ATM options (one call, one put) whose tenor equals the
rebalancing period, so held options always expire to intrinsic value at the
next rebalancing date.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import PathBatch, TimeGrid
from .neural import Network, ParamNodes, Tape, forward
from .pricing import bs_call, bs_put
from .risk_measures import HedgeStatistics, stats_suite

__all__ = [
    "PayoffSpec",
    "InstrumentSet",
    "FeatureSpec",
    "HedgeSetup",
    "HedgeEpisodeResult",
    "portfolio_step",
    "build_features",
    "rollout",
    "rollout_tape",
    "hedging_statistics",
    "feature_dim",
]


@dataclass(frozen=True)
class PayoffSpec:
    """European put, payoff max(K - S_N, 0)."""

    strike: float
    kind: str = "european_put"

    def __post_init__(self):
        if self.kind != "european_put":
            raise ValueError("only european_put payoffs are supported")
        if self.strike <= 0:
            raise ValueError("strike must be > 0")

    def terminal(self, s_terminal: np.ndarray) -> np.ndarray:
        return np.maximum(self.strike - s_terminal, 0.0)


@dataclass(frozen=True)
class InstrumentSet:
    """stock_only trades the underlying; atm_option_pair trades one ATM call
    and one ATM put per period, struck at the current spot with tenor equal
    to the rebalancing period."""

    kind: str = "stock_only"

    def __post_init__(self):
        if self.kind not in ("stock_only", "atm_option_pair"):
            raise ValueError("kind must be 'stock_only' or 'atm_option_pair'")

    @property
    def n_risky(self) -> int:
        return 1 if self.kind == "stock_only" else 2


@dataclass(frozen=True)
class FeatureSpec:
    """Feature order: [T - t_n, log(S_n/K), V_n (scaled), I_n (, IV_n)].

    Portfolio values are divided by v_tilde = 0.5 (V_A + V_B) under semi-L^p
    training; under CVaR the raw V_n is used (normalize=False).
    """

    aux_dim: int
    normalize: bool = True
    v_tilde: float = 1.0
    include_iv: bool = False

    def __post_init__(self):
        if self.normalize and self.v_tilde <= 0:
            raise ValueError("v_tilde must be > 0 when normalization is active")

    @property
    def dim(self) -> int:
        return 3 + self.aux_dim + (1 if self.include_iv else 0)

    @property
    def v_scale(self) -> float:
        return 1.0 / self.v_tilde if self.normalize else 1.0


@dataclass(frozen=True)
class HedgeSetup:
    """Everything a rollout needs beyond the network and V0."""

    payoff: PayoffSpec
    instruments: InstrumentSet
    grid: TimeGrid
    features: FeatureSpec


@dataclass(frozen=True)
class HedgeEpisodeResult:
    pi: np.ndarray            # terminal hedging error per path
    v_terminal: np.ndarray    # V_N per path
    v0: float
    side: str
    positions: np.ndarray | None = None  # (P, N, D) when requested


def portfolio_step(v_n, positions, s_begin, s_end, r: float, delta: float):
    """V_{n+1} = e^{r delta} V_n + positions . (S^(e) - e^{r delta} S^(b))."""
    accrual = math.exp(r * delta)
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    s_begin = np.atleast_2d(np.asarray(s_begin, dtype=float))
    s_end = np.atleast_2d(np.asarray(s_end, dtype=float))
    gain = np.einsum("ij,ij->i", positions, s_end - accrual * s_begin)
    out = accrual * np.asarray(v_n, dtype=float) + gain
    return float(out[0]) if out.size == 1 and np.isscalar(v_n) else out


def build_features(spec: FeatureSpec, ttm: float, s: float, strike: float,
                   v: float, aux=(), iv: float | None = None) -> np.ndarray:
    """Single-step feature vector in the canonical order."""
    if s <= 0:
        raise ValueError("spot must be > 0")
    x = [ttm, math.log(s / strike), v * spec.v_scale]
    x.extend(np.ravel(aux))
    if spec.include_iv:
        if iv is None:
            raise ValueError("feature spec includes IV but none was given")
        x.append(iv)
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError("non-finite feature input")
    if x.size != spec.dim:
        raise ValueError(f"feature dimension {x.size} != spec dim {spec.dim}")
    return x


def feature_dim(batch: PathBatch, instruments: InstrumentSet) -> int:
    """3 base features + model auxiliary state + IV for option hedges."""
    return 3 + batch.state_dim + (1 if instruments.kind == "atm_option_pair" else 0)


@dataclass(frozen=True)
class _EpisodeConstants:
    """Per-step constants of an episode; only V carries gradient."""

    pre: np.ndarray        # (N, P, 2): [ttm, log-moneyness]
    post: np.ndarray       # (N, P, k): auxiliary state (+ IV column)
    gains: np.ndarray      # (N, P, D): S^(e) - accrual * S^(b)
    payoff: np.ndarray     # (P,)
    accrual: float
    n_rebal: int


def _episode_constants(batch: PathBatch, setup: HedgeSetup) -> _EpisodeConstants:
    grid = setup.grid
    d = grid.days_per_period
    if batch.n_steps != grid.n_days:
        raise ValueError(f"batch has {batch.n_steps} days, grid expects {grid.n_days}")
    N = grid.N
    P = batch.n_paths
    accrual = math.exp(grid.r * grid.delta)
    idx = np.arange(N) * d                      # daily index of each rebalancing date
    spots = batch.spots[:, idx]                 # (P, N) beginning-of-period prices
    spots_next = batch.spots[:, idx + d]        # (P, N) end-of-period underlying

    pre = np.empty((N, P, 2))
    pre[:, :, 0] = (grid.T - np.arange(N) * grid.delta)[:, None]
    pre[:, :, 1] = np.log(spots / setup.payoff.strike).T

    aux = batch.state[:, idx, :]                # (P, N, k) I_n at rebal dates
    k = aux.shape[2] + (1 if setup.features.include_iv else 0)
    post = np.empty((N, P, k))
    post[:, :, : aux.shape[2]] = aux.transpose(1, 0, 2)
    if setup.features.include_iv:
        if batch.iv is None:
            raise ValueError("option-hedge features require an IV path on the batch")
        post[:, :, -1] = batch.iv[:, idx].T

    if setup.instruments.kind == "stock_only":
        gains = (spots_next - accrual * spots).T[:, :, None]
    else:
        if batch.iv is None:
            raise ValueError("atm_option_pair requires an IV path on the batch")
        iv = batch.iv[:, idx]
        tenor = grid.delta
        call_b = bs_call(iv, tenor, spots, spots, grid.r)
        put_b = bs_put(iv, tenor, spots, spots, grid.r)
        call_e = np.maximum(spots_next - spots, 0.0)   # intrinsic at expiry
        put_e = np.maximum(spots - spots_next, 0.0)
        gains = np.stack([call_e - accrual * call_b, put_e - accrual * put_b], axis=2).transpose(1, 0, 2)

    if setup.features.dim != 2 + 1 + (post.shape[2]):
        raise ValueError(
            f"feature spec dim {setup.features.dim} inconsistent with batch layout {3 + post.shape[2]}"
        )

    return _EpisodeConstants(
        pre=pre,
        post=post,
        gains=gains,
        payoff=setup.payoff.terminal(batch.spots[:, -1]),
        accrual=accrual,
        n_rebal=N,
    )


def rollout(net: Network, batch: PathBatch, v0: float, side: str,
            setup: HedgeSetup, keep_positions: bool = False) -> HedgeEpisodeResult:
    """Run the hedging episode on every path with frozen parameters."""
    if side not in ("long", "short"):
        raise ValueError("side must be 'long' or 'short'")
    if not math.isfinite(v0):
        raise ValueError("V0 must be finite")
    ep = _episode_constants(batch, setup)
    P = batch.n_paths
    scale = setup.features.v_scale
    v = np.full(P, float(v0))
    positions = np.empty((P, ep.n_rebal, setup.instruments.n_risky)) if keep_positions else None
    for n in range(ep.n_rebal):
        x = np.concatenate([ep.pre[n], v[:, None] * scale, ep.post[n]], axis=1)
        delta = forward(net, x)
        if keep_positions:
            positions[:, n, :] = delta
        v = ep.accrual * v + np.einsum("ij,ij->i", delta, ep.gains[n])
        if not np.isfinite(v).all():
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ArithmeticError(f"non-finite portfolio value at step {n}, path {bad}")
    pi = (ep.payoff if side == "short" else -ep.payoff) - v
    return HedgeEpisodeResult(pi=pi, v_terminal=v, v0=float(v0), side=side, positions=positions)


def rollout_tape(tape: Tape, params: ParamNodes, batch: PathBatch, v0: float,
                 side: str, setup: HedgeSetup):
    """Differentiable episode: same recursion as :func:`rollout`, recorded on
    the tape. Returns the hedging-error node."""
    ep = _episode_constants(batch, setup)
    scale = setup.features.v_scale
    v = tape.leaf(np.full(batch.n_paths, float(v0)))
    for n in range(ep.n_rebal):
        x = tape.features(ep.pre[n], v, scale, ep.post[n])
        delta = tape.network(params, x)
        v = tape.portfolio_update(v, delta, ep.gains[n], ep.accrual)
    return tape.hedging_error(v, ep.payoff, short=(side == "short"))


def hedging_statistics(result: HedgeEpisodeResult) -> HedgeStatistics:
    """Table-style statistics block of the episode's hedging errors."""
    return stats_suite(result.pi)
