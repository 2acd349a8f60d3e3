"""Binary snapshots and diagnostics CSV files.

Snapshot layout (little-endian, row-major)::

    b"CSH1" | u32 n | f64 L | f64 t | phi (n*n complex as f64 re, im pairs)
    | phi_t (same) | A_1 (n*n f64) | A_2 (n*n f64) | A-mean (2 x f64)

``A_1, A_2`` are the mean-free physical samples; the mean follows at the end.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .model import CSHState
from .spectral import TorusGrid

MAGIC = b"CSH1"
_HEADER = struct.Struct("<4sIdd")


class SnapshotFormatError(ValueError):
    pass


def snapshot_size(n: int) -> int:
    return _HEADER.size + n * n * (16 + 16 + 8 + 8) + 16


def snapshot_bytes(state: CSHState) -> bytes:
    g = state.grid
    parts = [
        _HEADER.pack(MAGIC, g.n, g.period, state.t),
        np.ascontiguousarray(state.phi, dtype="<c16").tobytes(),
        np.ascontiguousarray(state.phi_t, dtype="<c16").tobytes(),
        np.ascontiguousarray(state.a, dtype="<f8").tobytes(),
        np.ascontiguousarray(state.a_mean, dtype="<f8").tobytes(),
    ]
    return b"".join(parts)


def write_snapshot(state: CSHState, path) -> Path:
    path = Path(path)
    path.write_bytes(snapshot_bytes(state))
    return path


def parse_snapshot(data: bytes) -> CSHState:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError("truncated snapshot header")
    magic, n, period, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if len(data) != snapshot_size(n):
        raise SnapshotFormatError(f"snapshot size {len(data)} does not match n = {n}")
    try:
        grid = TorusGrid(n, period)
    except ValueError as exc:
        raise SnapshotFormatError(str(exc)) from None
    off = _HEADER.size
    cplx = n * n * 16
    phi = np.frombuffer(data, "<c16", n * n, off).reshape(n, n)
    off += cplx
    phi_t = np.frombuffer(data, "<c16", n * n, off).reshape(n, n)
    off += cplx
    a = np.frombuffer(data, "<f8", 2 * n * n, off).reshape(2, n, n)
    off += 2 * n * n * 8
    mean = np.frombuffer(data, "<f8", 2, off)
    return CSHState(grid, t, phi.copy(), phi_t.copy(), a.copy(), mean.copy())


def read_snapshot(path) -> CSHState:
    return parse_snapshot(Path(path).read_bytes())


def write_diagnostics(series, path) -> Path:
    series = list(series)
    if not series:
        raise ValueError("cannot write an empty diagnostics series")
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in series:
            fh.write(",".join(format(v, ".17g") for v in rec.row()) + "\n")
    return path


def read_diagnostics(path) -> list[DiagnosticsRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected diagnostics header {header}")
        return [DiagnosticsRecord(*(float(v) for v in row)) for row in reader]
