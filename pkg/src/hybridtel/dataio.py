"""Serialization: state/operator JSON, quadrature-record CSV, grid and trace CSV.

All emitters are deterministic byte-for-bit: floats are written with their
shortest round-trip repr, JSON keys are sorted, newlines are '\\n'.
"""
from __future__ import annotations

import csv
import json
import io
from pathlib import Path

import numpy as np

from .fock import DensityOperator, FockState
from .measurement import QuadratureRecord, WignerGrid

SCHEMA_VERSION = 1


def _interleave(z: np.ndarray) -> list[float]:
    out = np.empty(2 * z.size)
    out[0::2] = z.real.reshape(-1)
    out[1::2] = z.imag.reshape(-1)
    return [float(v) for v in out]


def _deinterleave(values: list[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return arr[0::2] + 1j * arr[1::2]


def state_to_json(state: FockState) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "pure",
        "mode_dims": list(state.mode_dims),
        "mode_labels": list(state.mode_labels),
        "amplitudes_re_im": _interleave(state.amplitudes),
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def state_from_json(text: str) -> FockState:
    payload = json.loads(text)
    return FockState(tuple(payload["mode_dims"]),
                     _deinterleave(payload["amplitudes_re_im"]),
                     tuple(payload["mode_labels"]))


def density_to_json(rho: DensityOperator) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "density",
        "mode_dims": list(rho.mode_dims),
        "mode_labels": list(rho.mode_labels),
        "matrix_re_im": _interleave(rho.matrix),
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def density_from_json(text: str) -> DensityOperator:
    payload = json.loads(text)
    dims = tuple(payload["mode_dims"])
    d = int(np.prod(dims))
    mat = _deinterleave(payload["matrix_re_im"]).reshape(d, d)
    return DensityOperator(dims, mat, tuple(payload["mode_labels"]))


def write_records_csv(path: str | Path, records: list[QuadratureRecord]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("mode,theta,x\n")
        for r in records:
            fh.write(f"{r.mode},{r.theta!r},{r.x!r}\n")


def read_records_csv(path: str | Path) -> list[QuadratureRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(QuadratureRecord(row["mode"], float(row["theta"]), float(row["x"])))
    return records


def table_csv(columns: list[str], rows: list[list], *, comment: str = "") -> str:
    """Render a CSV table with a schema-version header comment line."""
    buf = io.StringIO()
    buf.write(f"#schema-version {SCHEMA_VERSION}")
    if comment:
        buf.write(f" {comment}")
    buf.write("\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def wigner_to_csv(grid: WignerGrid, *, comment: str = "") -> str:
    """Wigner grid as CSV: axis metadata rows, then one matrix row per x value."""
    buf = io.StringIO()
    buf.write(f"#schema-version {SCHEMA_VERSION} wigner-grid")
    if comment:
        buf.write(f" {comment}")
    buf.write("\n")
    buf.write("#x," + ",".join(repr(float(v)) for v in grid.x) + "\n")
    buf.write("#p," + ",".join(repr(float(v)) for v in grid.p) + "\n")
    for row in grid.values:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def report_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
