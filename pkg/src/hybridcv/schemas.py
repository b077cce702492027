"""Layouts of every file the command line writes, and a validator for them.

Each schema names either CSV columns or required JSON keys together with a
value type. ``validate_file`` picks the schema from the file name unless one
is given and returns a list of problems (empty when the file conforms).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

_WIGNER = {"kind": "csv", "columns": {"x": "float", "p": "float", "w": "float"}}

SCHEMAS: dict[str, dict] = {
    "fidelity.json": {"kind": "json", "required": {
        "n": "int", "m": "int", "delta": "float", "sigma": "float", "squeeze": "float",
        "cutoff": "int", "qsp_mode": "str", "fidelity": "float", "target_fidelity": "float",
        "threshold": "float", "passed": "bool", "leaked_norm": "float",
        "probabilities": "object", "conditioned_mean_x": "object"}},
    "wigner_mode2_given_x0.csv": _WIGNER,
    "wigner_mode2_given_x1.csv": _WIGNER,
    "wigner.csv": _WIGNER,
    "qft_sweep.csv": {"kind": "csv", "columns": {
        "a": "int", "a_prime": "int", "cutoff": "int", "infidelity": "float",
        "worst_basis_infidelity": "float", "kept_weight": "float", "leaked_norm": "float",
        "bound_shape": "float"}},
    "qft_report.json": {"kind": "json", "required": {
        "n": "int", "m": "int", "delta": "float", "sigma_ratio": "float", "ordering": "str",
        "monotone": "bool", "rows": "list"}},
    "displacement_sweep.csv": {"kind": "csv", "columns": {
        "delta_err": "float", "fidelity_before": "float", "fidelity_after": "float",
        "in_guarantee": "bool"}},
    "error_correction.json": {"kind": "json", "required": {
        "n": "int", "delta": "float", "sigma": "float", "lattice": "list", "cat": "object"}},
    "breakeven.csv": {"kind": "csv", "columns": {
        "d": "float", "epsilon": "float", "required_ratio": "float"}},
    "resources.json": {"kind": "json", "required": {
        "delta": "float", "eps_qsp": "float", "runtime_constant": "float",
        "photon_loss": "object", "bounds": "object"}},
}


def _check(value, kind: str) -> bool:
    if kind == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "bool":
        return isinstance(value, bool)
    if kind == "str":
        return isinstance(value, str)
    if kind == "object":
        return isinstance(value, dict)
    if kind == "list":
        return isinstance(value, list)
    raise ValueError(f"unknown type {kind}")


def _parse_cell(text: str, kind: str):
    if kind == "int":
        return int(text)
    if kind == "float":
        v = float(text)
        if math.isnan(v):
            raise ValueError("nan")
        return v
    if kind == "bool":
        if text not in ("true", "false"):
            raise ValueError(text)
        return text == "true"
    return text


def validate_file(path: str | Path, schema: str | None = None) -> list[str]:
    path = Path(path)
    name = schema or path.name
    if name not in SCHEMAS:
        return [f"{path}: no schema named {name!r}"]
    spec = SCHEMAS[name]
    problems = []
    if spec["kind"] == "json":
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            return [f"{path}: {exc}"]
        for key, kind in spec["required"].items():
            if key not in data:
                problems.append(f"{path}: missing key {key!r}")
            elif not _check(data[key], kind):
                problems.append(f"{path}: key {key!r} is not of type {kind}")
        return problems
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return [f"{path}: empty file"]
    header, body = rows[0], rows[1:]
    expected = list(spec["columns"])
    if header != expected:
        return [f"{path}: header {header} differs from {expected}"]
    for i, row in enumerate(body, start=2):
        if len(row) != len(expected):
            problems.append(f"{path}:{i}: expected {len(expected)} fields, got {len(row)}")
            continue
        for cell, (col, kind) in zip(row, spec["columns"].items()):
            try:
                _parse_cell(cell, kind)
            except ValueError:
                problems.append(f"{path}:{i}: column {col!r} value {cell!r} is not {kind}")
    return problems
