import numpy as np
import pytest

from eqrisk import presets
from eqrisk.io import (
    batch_to_csv,
    load_batch,
    load_network,
    save_batch,
    save_network,
    write_csv,
)
from eqrisk.models import attach_iv, simulate_bsm, simulate_rs
from eqrisk.neural import glorot_init


class TestBatchRoundTrip:
    def test_minimal_batch(self, tmp_path):
        b = simulate_bsm(presets.bsm_sp500(), presets.grid_short_put(), 20, seed=1)
        p = tmp_path / "b.bin"
        save_batch(b, p)
        r = load_batch(p)
        np.testing.assert_array_equal(r.log_returns, b.log_returns)
        np.testing.assert_array_equal(r.spots, b.spots)
        assert r.state.shape == b.state.shape
        np.testing.assert_array_equal(r.innovations, b.innovations)
        assert r.regimes is None
        assert r.iv is None

    def test_full_batch_with_all_channels(self, tmp_path):
        b = simulate_rs(presets.rs_sp500(), presets.grid_short_put(), 15, seed=2)
        b = attach_iv(b, presets.iv_log_ar1(), seed=3)
        p = tmp_path / "b.bin"
        save_batch(b, p)
        r = load_batch(p)
        np.testing.assert_array_equal(r.state, b.state)
        np.testing.assert_array_equal(r.regimes, b.regimes)
        np.testing.assert_array_equal(r.iv, b.iv)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "junk.bin"
        p.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(ValueError, match="magic"):
            load_batch(p)

    def test_byte_identical_across_saves(self, tmp_path):
        b = simulate_bsm(presets.bsm_sp500(), presets.grid_short_put(), 10, seed=4)
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        save_batch(b, p1)
        save_batch(b, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestCsv:
    def test_small_batch_export(self, tmp_path):
        b = simulate_bsm(presets.bsm_sp500(), presets.grid_short_put(), 3, seed=5)
        p = tmp_path / "b.csv"
        batch_to_csv(b, p)
        lines = p.read_text().splitlines()
        assert lines[0].startswith("path,day,log_return,spot_begin,spot_end")
        assert len(lines) == 1 + 3 * 60

    def test_large_batch_rejected(self, tmp_path):
        b = simulate_bsm(presets.bsm_sp500(), presets.grid_short_put(), 1001, seed=6)
        with pytest.raises(ValueError):
            batch_to_csv(b, tmp_path / "b.csv")

    def test_write_csv_six_significant_digits(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, ["a", "b"], [[1.2345678912, "x"], [0.000123456789, "y"]])
        assert p.read_text() == "a,b\n1.23457,x\n0.000123457,y\n"


class TestNetworkCheckpoint:
    def test_round_trip(self, tmp_path):
        net = glorot_init((5, 56, 56, 1), seed=7)
        p = tmp_path / "net.ckpt"
        save_network(net, p)
        r = load_network(p)
        assert r.dims == net.dims
        for Wa, Wb in zip(r.weights, net.weights):
            np.testing.assert_array_equal(Wa, Wb)
        for ba, bb in zip(r.biases, net.biases):
            np.testing.assert_array_equal(ba, bb)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "junk.ckpt"
        p.write_bytes(b"XXXX" + b"\0" * 32)
        with pytest.raises(ValueError, match="magic"):
            load_network(p)
