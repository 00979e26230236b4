import yaml
import pytest

from eqrisk.cli import PRESETS, main, parse_risk, resolve_config


def run(args):
    return main([str(a) for a in args])


@pytest.fixture
def tiny_cfg(tmp_path):
    cfg = {
        "dynamics": "bsm",
        "payoff": {"strikes": [100.0]},
        "risk_measures": ["semi_lp:2"],
        "train": {"n_train_paths": 3000, "n_test_paths": 2000,
                  "batch_size": 1000, "epochs": 1, "learning_rate": 0.0005},
        "pricing": {"n_mc": 20000},
        "grid": {"N": 5, "r": 0.02},
        "n_paths": 20,
    }
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(cfg))
    return p


class TestConfigResolution:
    def test_preset_profiles(self):
        full = resolve_config(None, "paper-full", None, None)
        desk = resolve_config(None, "desk-scale", None, None)
        assert full["train"]["n_train_paths"] == 400_000
        assert full["train"]["epochs"] == 100
        assert desk["train"]["n_train_paths"] == 100_000
        assert desk["train"]["epochs"] == 20
        for cfg in (full, desk):
            assert cfg["train"]["batch_size"] == 1000
            assert cfg["train"]["learning_rate"] == 0.0005
            assert cfg["bisection"] == {"zeta": 0.01, "max_iter": 100}

    def test_file_overrides_preset(self, tiny_cfg):
        cfg = resolve_config(str(tiny_cfg), "desk-scale", None, None)
        assert cfg["train"]["epochs"] == 1
        assert cfg["train"]["batch_size"] == 1000  # untouched keys survive

    def test_seed_flag_rewrites_all_seeds(self):
        cfg = resolve_config(None, None, 1000, None)
        assert cfg["seeds"] == {"train_sim": 1100, "test_sim": 1200, "init": 1300,
                                "shuffle": 1400, "simulate": 1000, "price": 1000}

    def test_unknown_preset_rejected(self):
        with pytest.raises(ValueError):
            resolve_config(None, "warp-speed", None, None)

    def test_round_trip_is_identity(self, tmp_path):
        cfg = resolve_config(None, "desk-scale", 3, "out")
        p = tmp_path / "resolved.yaml"
        p.write_text(yaml.safe_dump(cfg))
        again = resolve_config(str(p), None, None, None)
        assert again == cfg
        assert yaml.safe_load(yaml.safe_dump(again)) == again


class TestParseRisk:
    def test_values(self):
        assert parse_risk("semi_lp:6").p == 6.0
        assert parse_risk("cvar:0.95").alpha == 0.95

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            parse_risk("entropic:1")


class TestExitCodes:
    def test_validation_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("risk_measures: ['entropic:1']\n")
        assert run(["erp", "--config", bad, "--out", tmp_path]) == 2

    def test_missing_config_file_is_2(self, tmp_path):
        assert run(["simulate", "--config", tmp_path / "nope.yaml"]) == 2

    def test_success_is_0(self, tiny_cfg, tmp_path):
        assert run(["simulate", "--config", tiny_cfg, "--out", tmp_path / "o"]) == 0


class TestCommands:
    def test_simulate_outputs_and_manifest(self, tiny_cfg, tmp_path):
        out = tmp_path / "sim"
        assert run(["simulate", "--config", tiny_cfg, "--out", out]) == 0
        assert (out / "paths_bsm.bin").exists()
        assert (out / "paths_bsm.csv").exists()
        manifest = yaml.safe_load((out / "simulate_manifest.yaml").read_text())
        assert manifest["command"] == "simulate"
        assert "paths_bsm.bin" in manifest["output_digests"]
        assert manifest["seeds"]["simulate"] == 0

    def test_simulate_deterministic_digests(self, tiny_cfg, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["simulate", "--config", tiny_cfg, "--out", a])
        run(["simulate", "--config", tiny_cfg, "--out", b])
        da = yaml.safe_load((a / "simulate_manifest.yaml").read_text())["output_digests"]
        db = yaml.safe_load((b / "simulate_manifest.yaml").read_text())["output_digests"]
        assert da == db

    def test_price_rn_csv(self, tiny_cfg, tmp_path):
        out = tmp_path / "px"
        assert run(["price-rn", "--config", tiny_cfg, "--out", out]) == 0
        lines = (out / "rn_prices.csv").read_text().splitlines()
        assert lines[0] == "model,K,T,price,std_error"
        assert lines[1].startswith("bsm,100,")

    def test_train_then_hedge_stats(self, tiny_cfg, tmp_path, capsys):
        out = tmp_path / "tr"
        assert run(["train", "--config", tiny_cfg, "--out", out]) == 0
        ckpt = out / "net_short_semi-L2.ckpt"
        assert ckpt.exists()
        cfg = yaml.safe_load(tiny_cfg.read_text())
        cfg["checkpoint"] = str(ckpt)
        cfg["v0"] = 3.5
        cfg2 = tmp_path / "hs.yaml"
        cfg2.write_text(yaml.safe_dump(cfg))
        assert run(["hedge-stats", "--config", cfg2, "--out", out]) == 0
        lines = (out / "hedge_stats.csv").read_text().splitlines()
        assert lines[0] == "statistic,value"
        assert lines[1].startswith("Mean,")

    def test_erp_outputs(self, tiny_cfg, tmp_path):
        out = tmp_path / "erp"
        assert run(["erp", "--config", tiny_cfg, "--out", out]) == 0
        fields = dict(line.split(",") for line in
                      (out / "erp_solution.csv").read_text().splitlines()[1:])
        assert float(fields["c0_q"]) > 0
        assert float(fields["c0_star"]) > 0
        assert (out / "erp_trace.csv").exists()
        assert (out / "net_long.ckpt").exists()
        assert (out / "net_short.ckpt").exists()

    def test_validate_outputs(self, tiny_cfg, tmp_path):
        out = tmp_path / "val"
        cfg = yaml.safe_load(tiny_cfg.read_text())
        cfg["v_stars"] = [3.0, 3.5]
        p = tmp_path / "v.yaml"
        p.write_text(yaml.safe_dump(cfg))
        assert run(["validate", "--config", p, "--out", out]) == 0
        lines = (out / "validate.csv").read_text().splitlines()
        assert lines[0] == "v_star,stat_interval_net,stat_fixed_net,relative_gap"
        assert len(lines) == 3
