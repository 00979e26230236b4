"""Configuration-driven experiment runner.

Subcommands: simulate, price-rn, train, erp, hedge-stats, table1..table4,
validate. Each run resolves a YAML config against a named preset
("paper-full" or "desk-scale"), executes the pipeline, and writes CSV
artifacts plus a run manifest with every seed and output digest needed to
reproduce the files byte-identically.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__, presets
from .erp import (
    BisectionConfig,
    MarketSpec,
    NoRootInIntervalError,
    Seeds,
    TrainConfig,
    bisection_solve,
    make_setup,
    residual_risk,
    train,
    validate_modified_training,
)
from .hedging import InstrumentSet, PayoffSpec, hedging_statistics, rollout
from .io import batch_to_csv, load_network, save_batch, save_network, write_csv
from .models import FilterUnderflowError, TimeGrid, simulate
from .neural import NonFiniteLossError
from .pricing import rn_price_put
from .risk_measures import RiskMeasureSpec, cvar_spec, semi_lp_spec

__all__ = ["main", "resolve_config", "parse_risk", "RunManifest", "PRESETS"]

# Named hyperparameter profiles. "paper-full" reproduces the original scale;
# "desk-scale" is the reduced profile used by the acceptance suite.
PRESETS: dict[str, dict] = {
    "paper-full": {
        "train": {"n_train_paths": 400_000, "n_test_paths": 100_000,
                  "batch_size": 1_000, "epochs": 100, "learning_rate": 0.0005},
        "pricing": {"n_mc": 1_000_000},
    },
    "desk-scale": {
        "train": {"n_train_paths": 100_000, "n_test_paths": 100_000,
                  "batch_size": 1_000, "epochs": 20, "learning_rate": 0.0005},
        "pricing": {"n_mc": 200_000},
    },
}

_DEFAULT_CONFIG: dict = {
    "preset": "desk-scale",
    "dynamics": "bsm",
    "grid": {"N": 60, "r": 0.02, "days_per_year": 260, "days_per_period": 1},
    "payoff": {"strikes": [90.0, 100.0, 110.0]},
    "instruments": "stock_only",
    "risk_measures": ["semi_lp:2"],
    "bisection": {"zeta": 0.01, "max_iter": 100},
    "seeds": {"train_sim": 100, "test_sim": 200, "init": 300, "shuffle": 400,
              "simulate": 0, "price": 0},
    "n_paths": 10_000,
    "out": "runs",
}


def parse_risk(label: str) -> RiskMeasureSpec:
    """'semi_lp:<p>' or 'cvar:<alpha>'."""
    kind, _, value = label.partition(":")
    if kind == "semi_lp":
        return semi_lp_spec(float(value or 2.0))
    if kind == "cvar":
        return cvar_spec(float(value or 0.95))
    raise ValueError(f"unknown risk measure {label!r}")


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve_config(config_path: str | None, preset: str | None,
                   seed: int | None, out: str | None) -> dict:
    """Defaults <- preset profile <- config file <- command-line flags."""
    file_cfg = {}
    if config_path:
        file_cfg = yaml.safe_load(Path(config_path).read_text()) or {}
        if not isinstance(file_cfg, dict):
            raise ValueError(f"config file {config_path} must contain a mapping")
    preset_name = preset or file_cfg.get("preset") or _DEFAULT_CONFIG["preset"]
    if preset_name not in PRESETS:
        raise ValueError(f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}")
    cfg = _deep_merge(_DEFAULT_CONFIG, PRESETS[preset_name])
    cfg = _deep_merge(cfg, file_cfg)
    cfg["preset"] = preset_name
    if seed is not None:
        base = int(seed)
        cfg["seeds"] = {"train_sim": base + 100, "test_sim": base + 200,
                        "init": base + 300, "shuffle": base + 400,
                        "simulate": base, "price": base}
    if out is not None:
        cfg["out"] = out
    return cfg


@dataclass(frozen=True)
class RunManifest:
    command: str
    resolved_config: dict
    engine_version: str
    wall_clock_utc: str
    seeds: dict
    output_digests: dict

    def write(self, path: Path) -> None:
        path.write_text(yaml.safe_dump(asdict(self), sort_keys=True))


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _finish(command: str, cfg: dict, outputs: list[Path]) -> None:
    out_dir = Path(cfg["out"])
    manifest = RunManifest(
        command=command,
        resolved_config=cfg,
        engine_version=__version__,
        wall_clock_utc=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        seeds=cfg["seeds"],
        output_digests={p.name: _digest(p) for p in outputs},
    )
    manifest.write(out_dir / f"{command}_manifest.yaml")
    for p in outputs:
        print(p)


def _grid(cfg: dict):
    g = cfg["grid"]
    return TimeGrid.make(
        N=int(g["N"]), r=float(g["r"]),
        days_per_year=int(g.get("days_per_year", 260)),
        days_per_period=int(g.get("days_per_period", 1)),
    )


def _market(cfg: dict) -> MarketSpec:
    params = presets.dynamics_by_name(cfg["dynamics"])
    iv = presets.iv_log_ar1() if cfg["instruments"] == "atm_option_pair" else None
    return MarketSpec(params=params, grid=_grid(cfg), iv=iv)


def _seeds(cfg: dict) -> Seeds:
    s = cfg["seeds"]
    return Seeds(train_sim=s["train_sim"], test_sim=s["test_sim"],
                 init=s["init"], shuffle=s["shuffle"])


def _train_config(cfg: dict, risk: RiskMeasureSpec, side: str,
                  v_bounds: tuple[float, float] | None = None,
                  offset: int = 0, **kw) -> TrainConfig:
    t = cfg["train"]
    mode = "interval" if v_bounds is not None else kw.pop("v0_mode", "fixed")
    return TrainConfig(
        risk=risk, side=side, v0_mode=mode, v_bounds=v_bounds,
        n_train_paths=int(t["n_train_paths"]), n_test_paths=int(t["n_test_paths"]),
        batch_size=int(t["batch_size"]), epochs=int(t["epochs"]),
        learning_rate=float(t["learning_rate"]), seeds=_seeds(cfg).offset(offset), **kw,
    )


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solve_erp(cfg: dict, risk: RiskMeasureSpec, strike: float,
               instruments: InstrumentSet, offset: int = 0):
    """Full pipeline for one (strike, measure) cell: price the put under Q,
    train long/short interval nets on the default search interval, bisect."""
    market = _market(cfg)
    payoff = PayoffSpec(strike=strike)
    c0q = rn_price_put(market.params, market.grid, strike,
                       n_mc=int(cfg["pricing"]["n_mc"]), seed=cfg["seeds"]["price"])
    bis = BisectionConfig.around_rn_price(
        c0q.value, zeta=float(cfg["bisection"]["zeta"]),
        max_iter=int(cfg["bisection"]["max_iter"]))
    bounds = (bis.v_low, bis.v_high)
    cfg_short = _train_config(cfg, risk, "short", v_bounds=bounds, offset=offset)
    cfg_long = _train_config(cfg, risk, "long", v_bounds=(-bounds[1], -bounds[0]),
                             offset=offset + 17)
    net_short = train(cfg_short, market, payoff, instruments)
    net_long = train(cfg_long, market, payoff, instruments, v_tilde=cfg_short.v_tilde)
    setup = make_setup(cfg_short, market, payoff, instruments)
    test = market.simulate(cfg_short.n_test_paths, cfg_short.seeds.test_sim)
    sol = bisection_solve(net_long, net_short, bis, test, risk, setup)
    return c0q, sol, (net_long, net_short, setup, test, market, payoff)


def cmd_simulate(cfg: dict) -> list[Path]:
    out = _out_dir(cfg)
    batch = simulate(presets.dynamics_by_name(cfg["dynamics"]), _grid(cfg),
                     int(cfg["n_paths"]), cfg["seeds"]["simulate"])
    bin_path = out / f"paths_{cfg['dynamics']}.bin"
    save_batch(batch, bin_path)
    outputs = [bin_path]
    if batch.n_paths <= 1000:
        csv_path = out / f"paths_{cfg['dynamics']}.csv"
        batch_to_csv(batch, csv_path)
        outputs.append(csv_path)
    return outputs


def cmd_price_rn(cfg: dict) -> list[Path]:
    out = _out_dir(cfg)
    grid = _grid(cfg)
    models = cfg.get("models", [cfg["dynamics"]])
    rows = []
    for name in models:
        params = presets.dynamics_by_name(name)
        for K in cfg["payoff"]["strikes"]:
            rp = rn_price_put(params, grid, float(K),
                              n_mc=int(cfg["pricing"]["n_mc"]), seed=cfg["seeds"]["price"])
            rows.append([name, float(K), grid.T, rp.value, rp.std_error])
    path = out / "rn_prices.csv"
    write_csv(path, ["model", "K", "T", "price", "std_error"], rows)
    return [path]


def cmd_train(cfg: dict) -> list[Path]:
    out = _out_dir(cfg)
    risk = parse_risk(cfg["risk_measures"][0])
    side = cfg.get("side", "short")
    strike = float(cfg["payoff"]["strikes"][0])
    market = _market(cfg)
    v_bounds = None
    if cfg.get("v_bounds"):
        v_bounds = (float(cfg["v_bounds"][0]), float(cfg["v_bounds"][1]))
    tc = _train_config(cfg, risk, side, v_bounds=v_bounds,
                       v0=float(cfg.get("v0", 0.0)))
    net = train(tc, market, PayoffSpec(strike=strike), InstrumentSet(cfg["instruments"]))
    path = out / f"net_{side}_{risk.label()}.ckpt"
    save_network(net, path)
    return [path]


def cmd_erp(cfg: dict) -> list[Path]:
    out = _out_dir(cfg)
    risk = parse_risk(cfg["risk_measures"][0])
    strike = float(cfg["payoff"]["strikes"][0])
    instruments = InstrumentSet(cfg["instruments"])
    c0q, sol, (net_long, net_short, *_) = _solve_erp(cfg, risk, strike, instruments)
    rows = [["c0_q", c0q.value], ["c0_star", sol.c0_star],
            ["eps_long", sol.eps_long], ["eps_short", sol.eps_short],
            ["converged", int(sol.converged)]]
    sol_path = out / "erp_solution.csv"
    write_csv(sol_path, ["field", "value"], rows)
    trace_path = out / "erp_trace.csv"
    write_csv(trace_path, ["iteration", "V", "risk_gap"],
              [[i, v, g] for i, (v, g) in enumerate(sol.iterations)])
    long_path, short_path = out / "net_long.ckpt", out / "net_short.ckpt"
    save_network(net_long, long_path)
    save_network(net_short, short_path)
    print(f"C0^Q {c0q.value:.6g}  C0* {sol.c0_star:.6g}  "
          f"eps_long {sol.eps_long:.6g}  eps_short {sol.eps_short:.6g}  "
          f"converged {sol.converged}")
    return [sol_path, trace_path, long_path, short_path]


def cmd_hedge_stats(cfg: dict) -> list[Path]:
    out = _out_dir(cfg)
    net = load_network(cfg["checkpoint"])
    risk = parse_risk(cfg["risk_measures"][0])
    side = cfg.get("side", "short")
    strike = float(cfg["payoff"]["strikes"][0])
    v0 = float(cfg["v0"])
    market = _market(cfg)
    payoff = PayoffSpec(strike=strike)
    instruments = InstrumentSet(cfg["instruments"])
    tc = _train_config(cfg, risk, side, v0=v0)
    setup = make_setup(tc, market, payoff, instruments)
    test = market.simulate(tc.n_test_paths, tc.seeds.test_sim)
    result = rollout(net, test, v0 if side == "short" else -v0, side, setup)
    stats = hedging_statistics(result)
    path = out / "hedge_stats.csv"
    write_csv(path, ["statistic", "value"], stats.as_rows())
    return [path]


def cmd_table1(cfg: dict) -> list[Path]:
    """Sensitivity of equal risk prices: moneyness x risk measure, columns
    C0^Q, C0*, and the relative premium C0*/C0^Q - 1."""
    out = _out_dir(cfg)
    instruments = InstrumentSet(cfg["instruments"])
    rows = []
    offset = 0
    for K in cfg["payoff"]["strikes"]:
        for label in cfg["risk_measures"]:
            risk = parse_risk(label)
            c0q, sol, _ = _solve_erp(cfg, risk, float(K), instruments, offset=offset)
            rows.append([float(K), risk.label(), c0q.value, sol.c0_star,
                         sol.c0_star / c0q.value - 1.0])
            offset += 1000
    path = out / "table1.csv"
    write_csv(path, ["K", "risk_measure", "c0_q", "c0_star", "premium"], rows)
    return [path]


def cmd_table2(cfg: dict) -> list[Path]:
    """Hedging statistics of the short position funded at C0* for each
    risk measure."""
    out = _out_dir(cfg)
    instruments = InstrumentSet(cfg["instruments"])
    strike = float(cfg["payoff"]["strikes"][0])
    rows = []
    for j, label in enumerate(cfg["risk_measures"]):
        risk = parse_risk(label)
        c0q, sol, (net_long, net_short, setup, test, market, payoff) = \
            _solve_erp(cfg, risk, strike, instruments, offset=1000 * j)
        result = rollout(net_short, test, sol.c0_star, "short", setup)
        for stat, value in hedging_statistics(result).as_rows():
            rows.append([risk.label(), stat, value])
    path = out / "table2.csv"
    write_csv(path, ["risk_measure", "statistic", "value"], rows)
    return [path]


def cmd_table3(cfg: dict) -> list[Path]:
    """C0^Q and equal risk price per dynamics (BSM, MJD, GJR-GARCH)."""
    out = _out_dir(cfg)
    instruments = InstrumentSet(cfg["instruments"])
    risk = parse_risk(cfg["risk_measures"][0])
    strike = float(cfg["payoff"]["strikes"][0])
    rows = []
    for j, name in enumerate(cfg.get("models", ["bsm", "mjd", "garch"])):
        sub = dict(cfg, dynamics=name)
        c0q, sol, _ = _solve_erp(sub, risk, strike, instruments, offset=1000 * j)
        rows.append([name, strike, c0q.value, sol.c0_star,
                     sol.c0_star / c0q.value - 1.0])
    path = out / "table3.csv"
    write_csv(path, ["model", "K", "c0_q", "c0_star", "premium"], rows)
    return [path]


def cmd_table4(cfg: dict) -> list[Path]:
    """Jump-risk sensitivity: one-year horizon, r=0.03, 252 trading days;
    equal risk prices across rebalancing frequencies and hedge instruments."""
    out = _out_dir(cfg)
    risk = parse_risk(cfg["risk_measures"][0])
    strike = float(cfg["payoff"]["strikes"][0])
    rows = []
    cells = cfg.get("cells") or [
        {"days_per_period": 1, "instruments": "stock_only"},
        {"days_per_period": 21, "instruments": "stock_only"},
        {"days_per_period": 21, "instruments": "atm_option_pair"},
        {"days_per_period": 63, "instruments": "atm_option_pair"},
    ]
    for j, cell in enumerate(cells):
        dpp = int(cell["days_per_period"])
        sub = dict(cfg, dynamics="mjd_one_year",
                   instruments=cell["instruments"],
                   grid={"N": 252 // dpp, "r": 0.03,
                         "days_per_year": 252, "days_per_period": dpp})
        c0q, sol, _ = _solve_erp(sub, risk, strike,
                                 InstrumentSet(cell["instruments"]), offset=1000 * j)
        rows.append([dpp, cell["instruments"], c0q.value, sol.c0_star])
    path = out / "table4.csv"
    write_csv(path, ["days_per_period", "instruments", "c0_q", "c0_star"], rows)
    return [path]


def cmd_validate(cfg: dict) -> list[Path]:
    """Interval-trained vs fixed-capital networks at sampled V*."""
    out = _out_dir(cfg)
    risk = parse_risk(cfg["risk_measures"][0])
    strike = float(cfg["payoff"]["strikes"][0])
    market = _market(cfg)
    c0q = rn_price_put(market.params, market.grid, strike,
                       n_mc=int(cfg["pricing"]["n_mc"]), seed=cfg["seeds"]["price"])
    bounds = (0.75 * c0q.value, 1.50 * c0q.value)
    tc = _train_config(cfg, risk, cfg.get("side", "short"), v_bounds=bounds)
    v_stars = cfg.get("v_stars") or list(np.linspace(bounds[0], bounds[1], 3)[1:-1]) + [c0q.value]
    rows = validate_modified_training(tc, market, PayoffSpec(strike=strike),
                                      tuple(float(v) for v in v_stars),
                                      InstrumentSet(cfg["instruments"]))
    path = out / "validate.csv"
    write_csv(path, ["v_star", "stat_interval_net", "stat_fixed_net", "relative_gap"],
              [[r.v_star, r.stat_interval_net, r.stat_fixed_net, r.relative_gap]
               for r in rows])
    return [path]


_COMMANDS = {
    "simulate": cmd_simulate,
    "price-rn": cmd_price_rn,
    "train": cmd_train,
    "erp": cmd_erp,
    "hedge-stats": cmd_hedge_stats,
    "table1": cmd_table1,
    "table2": cmd_table2,
    "table3": cmd_table3,
    "table4": cmd_table4,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqrisk",
                                     description="Equal risk pricing experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="hyperparameter profile")
        p.add_argument("--seed", type=int, help="base seed overriding the config seeds")
        p.add_argument("--out", help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.config, args.preset, args.seed, args.out)
        outputs = _COMMANDS[args.command](cfg)
        _finish(args.command, cfg, outputs)
    except (ValueError, KeyError, FileNotFoundError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NoRootInIntervalError, NonFiniteLossError, FilterUnderflowError,
            ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
