"""Run artifacts: versioned CSV files, manifests, and state import/export.

Every CSV starts with one comment line ``# dcsplit-csv v<N> kind=<kind>``;
writers go through a temp file plus rename so partial files never appear.
The binary state dump is magic ``DCS1`` followed by little-endian int64
``n_points``, ``m`` and float64 ``t``, then ``n_points * m`` float64 values
in point-major order.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile

import numpy as np

__all__ = [
    "CSV_SCHEMA_VERSION",
    "write_csv",
    "read_csv",
    "write_manifest",
    "read_manifest",
    "save_state_csv",
    "load_state_csv",
    "save_state_binary",
    "load_state_binary",
    "fit_loglog_slope",
]

CSV_SCHEMA_VERSION = 1
STATE_MAGIC = b"DCS1"


def _atomic_write(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, kind: str, columns: list[str], rows, meta: dict | None = None) -> None:
    if any(ch.isspace() for ch in kind):
        raise ValueError("kind must be a single token")
    buf = io.StringIO()
    extra = "".join(f" {k}={v}" for k, v in (meta or {}).items())
    buf.write(f"# dcsplit-csv v{CSV_SCHEMA_VERSION} kind={kind}{extra}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if v is None else v for v in row])
    _atomic_write(path, buf.getvalue().encode())


def read_csv(path: str, expect_kind: str | None = None):
    """Returns ``(kind, meta, columns, rows)`` with rows as lists of strings."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if not header.startswith("# dcsplit-csv "):
            raise ValueError(f"{path}: missing schema header")
        fields = header[2:].split()
        version = fields[1]
        if version != f"v{CSV_SCHEMA_VERSION}":
            raise ValueError(f"{path}: schema {version} not supported")
        meta = dict(f.split("=", 1) for f in fields[2:])
        kind = meta.pop("kind", "")
        if expect_kind is not None and kind != expect_kind:
            raise ValueError(f"{path}: kind {kind!r}, expected {expect_kind!r}")
        rd = csv.reader(fh)
        columns = next(rd)
        rows = [row for row in rd if row]
    return kind, meta, columns, rows


def write_manifest(path: str, manifest: dict) -> None:
    _atomic_write(path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())


def read_manifest(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save_state_csv(path: str, x: np.ndarray, state: np.ndarray, m: int, t: float) -> None:
    U = state.reshape(-1, m)
    cols = ["x"] + [f"u{sp}" for sp in range(m)]
    rows = [[f"{xi:.17g}"] + [f"{v:.17g}" for v in U[i]] for i, xi in enumerate(x)]
    write_csv(path, "state", cols, rows, meta={"t": f"{t:.17g}", "m": m})


def load_state_csv(path: str):
    kind, meta, cols, rows = read_csv(path, expect_kind="state")
    x = np.array([float(r[0]) for r in rows])
    U = np.array([[float(v) for v in r[1:]] for r in rows])
    return x, U.ravel(), float(meta["t"])


def save_trajectory_csv(path: str, times, states, m: int) -> None:
    """Checkpoint trajectory as one row per time: t, then the flat state."""
    states = [np.asarray(s).ravel() for s in states]
    size = states[0].size
    cols = ["t"] + [f"s{i}" for i in range(size)]
    rows = [[f"{t:.17g}"] + [f"{v:.17g}" for v in s] for t, s in zip(times, states)]
    write_csv(path, "trajectory", cols, rows, meta={"m": m})


def load_trajectory_csv(path: str):
    kind, meta, cols, rows = read_csv(path, expect_kind="trajectory")
    times = [float(r[0]) for r in rows]
    states = [np.array([float(v) for v in r[1:]]) for r in rows]
    return times, states, int(meta["m"])


def save_state_binary(path: str, state: np.ndarray, m: int, t: float) -> None:
    U = np.ascontiguousarray(state, dtype="<f8")
    n_points = U.size // m
    head = STATE_MAGIC + struct.pack("<qqd", n_points, m, t)
    _atomic_write(path, head + U.tobytes())


def load_state_binary(path: str):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != STATE_MAGIC:
        raise ValueError(f"{path}: bad magic")
    if len(raw) < 28:
        raise ValueError(f"{path}: truncated header")
    n_points, m, t = struct.unpack("<qqd", raw[4:28])
    state = np.frombuffer(raw[28:], dtype="<f8").astype(float)
    if state.size != n_points * m:
        raise ValueError(f"{path}: truncated state payload")
    return state, m, t


def fit_loglog_slope(dts, errs, floor: float = 0.0):
    """Least-squares slope of log2(err) against log2(dt), skipping floor rows.

    Rows with error at or below ``floor`` (estimator/reference noise) are
    excluded; returns ``None`` when fewer than two usable rows remain.
    """
    dts = np.asarray(dts, dtype=float)
    errs = np.asarray(errs, dtype=float)
    keep = (errs > floor) & np.isfinite(errs) & (dts > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log2(dts[keep]), np.log2(errs[keep]), 1)[0])
