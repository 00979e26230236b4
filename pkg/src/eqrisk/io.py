"""File formats: PathBatch binary/CSV export and network checkpoints.

Binary layouts are little-endian with a fixed header (magic, version,
shape fields) followed by row-major float64 payloads.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .models import PathBatch
from .neural import Network

__all__ = [
    "save_batch",
    "load_batch",
    "batch_to_csv",
    "save_network",
    "load_network",
    "write_csv",
]

_BATCH_MAGIC = b"EQRB"
_NET_MAGIC = b"EQRN"
_VERSION = 1


def save_batch(batch: PathBatch, path: str | Path) -> None:
    """Header: magic, version, n_paths, n_days, n_assets (1), state_dim,
    flags (bit0 iv, bit1 innovations, bit2 regimes); then row-major doubles."""
    flags = (1 if batch.iv is not None else 0) \
        | (2 if batch.innovations is not None else 0) \
        | (4 if batch.regimes is not None else 0)
    with open(path, "wb") as fh:
        fh.write(_BATCH_MAGIC)
        fh.write(struct.pack("<qqqqqq", _VERSION, batch.n_paths, batch.n_steps, 1,
                             batch.state_dim, flags))
        fh.write(np.ascontiguousarray(batch.log_returns).tobytes())
        fh.write(np.ascontiguousarray(batch.spots).tobytes())
        fh.write(np.ascontiguousarray(batch.state).tobytes())
        if batch.iv is not None:
            fh.write(np.ascontiguousarray(batch.iv).tobytes())
        if batch.innovations is not None:
            fh.write(np.ascontiguousarray(batch.innovations).tobytes())
        if batch.regimes is not None:
            fh.write(np.ascontiguousarray(batch.regimes.astype(np.float64)).tobytes())


def load_batch(path: str | Path) -> PathBatch:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BATCH_MAGIC:
            raise ValueError(f"not a PathBatch file: bad magic {magic!r}")
        version, P, n, n_assets, k, flags = struct.unpack("<qqqqqq", fh.read(48))
        if version != _VERSION:
            raise ValueError(f"unsupported PathBatch version {version}")
        if n_assets != 1:
            raise ValueError("only single-underlying batches are supported")

        def read(shape):
            count = int(np.prod(shape))
            arr = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
            return arr.reshape(shape).copy()

        log_returns = read((P, n))
        spots = read((P, n + 1))
        state = read((P, n, k))
        iv = read((P, n + 1)) if flags & 1 else None
        innovations = read((P, n)) if flags & 2 else None
        regimes = read((P, n)).astype(np.int64) if flags & 4 else None
    return PathBatch(log_returns=log_returns, spots=spots, state=state,
                     innovations=innovations, regimes=regimes, iv=iv)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    """Fixed column order, 6 significant digits, deterministic bytes."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) if isinstance(c, float) else str(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n")


def batch_to_csv(batch: PathBatch, path: str | Path, max_paths: int = 1000) -> None:
    """Long-format CSV for small batches: one row per (path, day)."""
    if batch.n_paths > max_paths:
        raise ValueError(f"batch too large for CSV export ({batch.n_paths} > {max_paths} paths)")
    header = ["path", "day", "log_return", "spot_begin", "spot_end"]
    header += [f"state_{j}" for j in range(batch.state_dim)]
    if batch.iv is not None:
        header.append("iv")
    rows = []
    for i in range(batch.n_paths):
        for nday in range(batch.n_steps):
            row = [i, nday, float(batch.log_returns[i, nday]),
                   float(batch.spots[i, nday]), float(batch.spots[i, nday + 1])]
            row += [float(v) for v in batch.state[i, nday]]
            if batch.iv is not None:
                row.append(float(batch.iv[i, nday]))
            rows.append(row)
    write_csv(path, header, rows)


def save_network(net: Network, path: str | Path) -> None:
    """Header: magic, version, layer count, dims; then per-layer row-major
    weights and biases as float64."""
    dims = net.dims
    with open(path, "wb") as fh:
        fh.write(_NET_MAGIC)
        fh.write(struct.pack("<qq", _VERSION, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}q", *dims))
        for W, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(W).tobytes())
            fh.write(np.ascontiguousarray(b).tobytes())


def load_network(path: str | Path) -> Network:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _NET_MAGIC:
            raise ValueError(f"not a network checkpoint: bad magic {magic!r}")
        version, n_dims = struct.unpack("<qq", fh.read(16))
        if version != _VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        dims = struct.unpack(f"<{n_dims}q", fh.read(8 * n_dims))
        weights, biases = [], []
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            W = np.frombuffer(fh.read(d_out * d_in * 8), dtype="<f8").reshape(d_out, d_in).copy()
            b = np.frombuffer(fh.read(d_out * 8), dtype="<f8").copy()
            weights.append(W)
            biases.append(b)
    return Network(weights, biases)
