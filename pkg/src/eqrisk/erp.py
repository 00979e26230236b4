"""Equal risk pricing: training loops, residual-risk evaluation, bisection
solver and the convex-measure shortcut.

Two policies (long and short) are trained by minibatch SGD on simulated
paths. Under non-translation-invariant risk measures the initial capital is
sampled uniformly per minibatch from the bisection search interval so one
training run serves every bisection query; under CVaR the convex shortcut
prices directly from the residual risks at zero initial capital.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import models
from .hedging import (
    FeatureSpec,
    HedgeSetup,
    InstrumentSet,
    PayoffSpec,
    feature_dim,
    rollout,
    rollout_tape,
)
from .models import IVParams, PathBatch, TimeGrid, attach_iv
from .neural import AdamState, Network, adam_step, glorot_init, grad_loss
from .risk_measures import RiskMeasureSpec, semi_lp

__all__ = [
    "Seeds",
    "MarketSpec",
    "TrainConfig",
    "BisectionConfig",
    "ErpSolution",
    "NoRootInIntervalError",
    "desk_scale",
    "paper_full",
    "train",
    "residual_risk",
    "bisection_solve",
    "erp_convex_shortcut",
    "validate_modified_training",
    "delta_gap_profile",
]

HIDDEN_DIMS = (56, 56)


class NoRootInIntervalError(ArithmeticError):
    """The risk gap does not change sign on [V_A, V_B]; restart with a new
    search interval."""


@dataclass(frozen=True)
class Seeds:
    train_sim: int = 100
    test_sim: int = 200
    init: int = 300
    shuffle: int = 400

    def offset(self, k: int) -> "Seeds":
        return Seeds(self.train_sim + k, self.test_sim + k, self.init + k, self.shuffle + k)


@dataclass(frozen=True)
class MarketSpec:
    """Dynamics parameters plus the trading grid; iv drives option-hedge
    instrument pricing when present."""

    params: object
    grid: TimeGrid
    iv: IVParams | None = None

    def simulate(self, n_paths: int, seed: int) -> PathBatch:
        batch = models.simulate(self.params, self.grid, n_paths, seed)
        if self.iv is not None:
            batch = attach_iv(batch, self.iv, seed + 7919)
        return batch


@dataclass(frozen=True)
class TrainConfig:
    risk: RiskMeasureSpec
    side: str
    v0_mode: str = "interval"          # "fixed" | "interval"
    v0: float = 0.0                    # fixed mode
    v_bounds: tuple[float, float] | None = None  # interval bounds; also sets v_tilde
    n_train_paths: int = 400_000
    n_test_paths: int = 100_000
    batch_size: int = 1_000
    epochs: int = 100
    learning_rate: float = 0.0005
    seeds: Seeds = field(default_factory=Seeds)

    def __post_init__(self):
        if self.side not in ("long", "short"):
            raise ValueError("side must be 'long' or 'short'")
        if self.v0_mode not in ("fixed", "interval"):
            raise ValueError("v0_mode must be 'fixed' or 'interval'")
        if self.v0_mode == "interval":
            if self.v_bounds is None or not self.v_bounds[0] < self.v_bounds[1]:
                raise ValueError("interval mode requires v_bounds with V_A < V_B")
        if self.n_train_paths < self.batch_size:
            raise ValueError("training set smaller than one minibatch")

    @property
    def v_tilde(self) -> float:
        if self.v_bounds is not None:
            return 0.5 * (self.v_bounds[0] + self.v_bounds[1])
        return self.v0 if self.v0 > 0 else 1.0


def desk_scale(risk: RiskMeasureSpec, side: str, **kw) -> TrainConfig:
    """Reduced acceptance profile: 10^5 training paths, 20 epochs."""
    kw.setdefault("n_train_paths", 100_000)
    kw.setdefault("epochs", 20)
    return TrainConfig(risk=risk, side=side, **kw)


def paper_full(risk: RiskMeasureSpec, side: str, **kw) -> TrainConfig:
    """Full experiment scale: 4x10^5 paths, 100 epochs."""
    return TrainConfig(risk=risk, side=side, **kw)


def make_setup(config: TrainConfig, market: MarketSpec, payoff: PayoffSpec,
               instruments: InstrumentSet, probe: PathBatch | None = None,
               v_tilde: float | None = None) -> HedgeSetup:
    """Feature layout for this experiment: portfolio values are normalized by
    v_tilde under semi-L^p and fed raw under CVaR."""
    if probe is None:
        probe = market.simulate(1, config.seeds.train_sim)
    spec = FeatureSpec(
        aux_dim=probe.state_dim,
        normalize=(config.risk.kind == "semi_lp"),
        v_tilde=config.v_tilde if v_tilde is None else v_tilde,
        include_iv=(instruments.kind == "atm_option_pair"),
    )
    return HedgeSetup(payoff=payoff, instruments=instruments, grid=market.grid, features=spec)


def train(config: TrainConfig, market: MarketSpec, payoff: PayoffSpec,
          instruments: InstrumentSet | None = None,
          callback=None, v_tilde: float | None = None) -> Network:
    """Minibatch SGD over full epochs (shuffle without replacement).

    In interval mode one V0 ~ Uniform(V_A, V_B) is drawn per minibatch and
    shared by all its paths. Returns the trained network; ``callback(epoch,
    mean_loss)`` is invoked after each epoch when given.
    """
    instruments = instruments or InstrumentSet("stock_only")
    batch = market.simulate(config.n_train_paths, config.seeds.train_sim)
    setup = make_setup(config, market, payoff, instruments, probe=batch, v_tilde=v_tilde)

    dims = (setup.features.dim, *HIDDEN_DIMS, instruments.n_risky)
    net = glorot_init(dims, config.seeds.init)
    if config.epochs == 0:
        return net
    state = AdamState.init(net, lr=config.learning_rate)
    rng = np.random.default_rng(config.seeds.shuffle)

    n = config.n_train_paths
    bs = config.batch_size
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        losses = []
        for start in range(0, n - bs + 1, bs):
            idx = perm[start:start + bs]
            sub = batch.subset(idx)
            if config.v0_mode == "interval":
                v0 = float(rng.uniform(*config.v_bounds))
            else:
                v0 = config.v0

            def closure(tape, params, sub=sub, v0=v0):
                return rollout_tape(tape, params, sub, v0, config.side, setup)

            loss, grads = grad_loss(net, closure, config.risk)
            net, state = adam_step(state, net, grads)
            losses.append(loss)
        if callback is not None:
            callback(epoch, float(np.mean(losses)))
    return net


def residual_risk(net: Network, v0: float, side: str, test_batch: PathBatch,
                  risk: RiskMeasureSpec, setup: HedgeSetup) -> float:
    """Out-of-sample empirical risk of the episode's hedging errors."""
    result = rollout(net, test_batch, v0, side, setup)
    return risk.evaluate(result.pi)


@dataclass(frozen=True)
class BisectionConfig:
    v_low: float
    v_high: float
    zeta: float = 0.01
    max_iter: int = 100

    def __post_init__(self):
        if self.zeta <= 0:
            raise ValueError("zeta must be > 0")
        if not self.v_low < self.v_high:
            raise ValueError("need V_A < V_B")

    @classmethod
    def around_rn_price(cls, c0q: float, zeta: float = 0.01, max_iter: int = 100) -> "BisectionConfig":
        # default search interval [0.75 C0^Q, 1.50 C0^Q]
        return cls(v_low=0.75 * c0q, v_high=1.50 * c0q, zeta=zeta, max_iter=max_iter)


@dataclass(frozen=True)
class ErpSolution:
    c0_star: float
    eps_long: float
    eps_short: float
    iterations: tuple[tuple[float, float], ...]  # (V, risk gap) trace
    converged: bool


def bisection_solve(net_long: Network, net_short: Network, cfg: BisectionConfig,
                    test_batch: PathBatch, risk: RiskMeasureSpec,
                    setup: HedgeSetup,
                    gap_fn=None) -> ErpSolution:
    """Find V with epsilon_short(V) ~= epsilon_long(-V) by bisection.

    ``gap_fn(V) -> (gap, eps_long, eps_short)`` may be injected for synthetic
    gap functions; by default both sides are evaluated on the test set.
    """
    if gap_fn is None:
        def gap_fn(v):
            es = residual_risk(net_short, v, "short", test_batch, risk, setup)
            el = residual_risk(net_long, -v, "long", test_batch, risk, setup)
            return es - el, el, es

    gap_low, _, _ = gap_fn(cfg.v_low)
    gap_high, _, _ = gap_fn(cfg.v_high)
    if math.copysign(1.0, gap_low) == math.copysign(1.0, gap_high):
        raise NoRootInIntervalError(
            f"risk gap has no sign change on [{cfg.v_low}, {cfg.v_high}]; "
            "restart with a new search interval"
        )

    lo, hi = cfg.v_low, cfg.v_high
    trace = []
    v, gap, el, es = lo, math.inf, math.nan, math.nan
    for _ in range(cfg.max_iter):
        v = 0.5 * (lo + hi)
        gap, el, es = gap_fn(v)
        trace.append((v, gap))
        if abs(gap) <= cfg.zeta:
            return ErpSolution(c0_star=v, eps_long=el, eps_short=es,
                               iterations=tuple(trace), converged=True)
        if gap > 0:
            lo = v
        else:
            hi = v
    return ErpSolution(c0_star=v, eps_long=el, eps_short=es,
                       iterations=tuple(trace), converged=False)


def erp_convex_shortcut(eps_short_at_0: float, eps_long_at_0: float, b_terminal: float,
                        risk: RiskMeasureSpec) -> float:
    """C0* = 0.5 * B_N * (eps_short(0) - eps_long(0)); valid only for
    translation-invariant measures."""
    if not risk.translation_invariant:
        raise ValueError("convex shortcut requires a translation-invariant risk measure")
    return 0.5 * b_terminal * (eps_short_at_0 - eps_long_at_0)


def delta_gap_profile(net_long: Network, net_short: Network, cfg: BisectionConfig,
                      test_batch: PathBatch, risk: RiskMeasureSpec, setup: HedgeSetup,
                      n_points: int = 10) -> list[tuple[float, float]]:
    """Risk gap on an n-point grid of the search interval; bisection assumes
    this is monotone nonincreasing in V."""
    out = []
    for v in np.linspace(cfg.v_low, cfg.v_high, n_points):
        es = residual_risk(net_short, float(v), "short", test_batch, risk, setup)
        el = residual_risk(net_long, -float(v), "long", test_batch, risk, setup)
        out.append((float(v), es - el))
    return out


@dataclass(frozen=True)
class ValidationRow:
    v_star: float
    stat_interval_net: float
    stat_fixed_net: float

    @property
    def relative_gap(self) -> float:
        diff = abs(self.stat_interval_net - self.stat_fixed_net)
        denom = abs(self.stat_fixed_net)
        return diff / denom if denom > 0 else diff


def validate_modified_training(config: TrainConfig, market: MarketSpec, payoff: PayoffSpec,
                               v_stars: tuple[float, ...],
                               instruments: InstrumentSet | None = None) -> list[ValidationRow]:
    """Interval-vs-fixed training comparison.

    Trains one interval net, then for each sampled V* a fixed-V0 net, and
    reports the out-of-sample risk statistic of both evaluated at V*.
    """
    if config.v0_mode != "interval":
        raise ValueError("validation protocol starts from an interval-mode config")
    instruments = instruments or InstrumentSet("stock_only")
    interval_net = train(config, market, payoff, instruments)
    setup = make_setup(config, market, payoff, instruments)
    test_batch = market.simulate(config.n_test_paths, config.seeds.test_sim)

    rows = []
    for k, v_star in enumerate(v_stars):
        # fixed nets keep the interval net's v_tilde so both see identically
        # scaled features
        fixed_cfg = replace(config, v0_mode="fixed", v0=float(v_star), v_bounds=None,
                            seeds=config.seeds.offset(1000 * (k + 1)))
        fixed_net = train(fixed_cfg, market, payoff, instruments, v_tilde=config.v_tilde)
        s_int = residual_risk(interval_net, float(v_star), config.side, test_batch, config.risk, setup)
        s_fix = residual_risk(fixed_net, float(v_star), config.side, test_batch, config.risk, setup)
        rows.append(ValidationRow(v_star=float(v_star), stat_interval_net=s_int, stat_fixed_net=s_fix))
    return rows
