"""CSV reading and validation for the benchmark artifact schemas.

Field profiles:  x, rho, ux, uy, T [, std_rho, std_ux, std_uy, std_T] [, err_*]
Error tables:    method, k|samples, err_* columns
Label history:   step, cell, label
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class SchemaError(Exception):
    """A CSV does not match the expected schema; the message lists columns."""


def read_csv(path):
    """Parse a benchmark CSV into {column: array}; '#' comment lines skipped.

    Non-numeric columns (e.g. method names) come back as object arrays.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file does not exist")
    lines = [ln.strip() for ln in path.read_text().splitlines()
             if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: empty CSV")
    names = [c.strip() for c in lines[0].split(",")]
    rows = [ln.split(",") for ln in lines[1:]]
    if not rows:
        raise SchemaError(f"{path}: no data rows (columns: {names})")
    if any(len(r) != len(names) for r in rows):
        raise SchemaError(f"{path}: ragged rows (columns: {names})")
    cols = {}
    for i, name in enumerate(names):
        raw = [r[i] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in raw])
        except ValueError:
            cols[name] = np.array(raw, dtype=object)
    return cols


def validate_columns(cols: dict, required, path="<csv>") -> None:
    missing = [c for c in required if c not in cols]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing}; found {sorted(cols)}")
