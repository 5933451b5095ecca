"""Flat-file emission: trajectory/shape CSV and JSON documents.

Trajectory CSV columns::

    t, r1x..r1z, x1x..x1z, y1x..y1z, z1x..z1z, r2x..z2z, u1, v1, u2, v2,
    rho, rho1b, rho2b, xbar1, xbar2, xbar1b, xbar2b, xtilde

Numbers use ``%.17g`` (lossless for doubles) and lines end with ``\\n``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .geometry import orthonormality_error

SHAPE_COLUMNS = ["rho", "rho1b", "rho2b", "xbar1", "xbar2", "xbar1b", "xbar2b", "xtilde"]


def _state_columns() -> list[str]:
    cols = []
    for i in (1, 2):
        for vec in ("r", "x", "y", "z"):
            cols += [f"{vec}{i}{c}" for c in "xyz"]
    return cols


TRAJECTORY_COLUMNS = ["t"] + _state_columns() + ["u1", "v1", "u2", "v2"] + SHAPE_COLUMNS


def fmt(value: float) -> str:
    return "%.17g" % value


def trajectory_rows(record) -> np.ndarray:
    if record.positions.ndim != 3:
        raise ValueError("CSV emission needs an unbatched trajectory")
    n = len(record.times)
    per_agent = np.concatenate([record.positions[:, :, None, :], record.frames], axis=2)
    return np.column_stack(
        [record.times, per_agent.reshape(n, 24), record.inputs.reshape(n, 4), record.shapes]
    )


def write_table(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_trajectory_csv(path, record) -> None:
    write_table(path, TRAJECTORY_COLUMNS, trajectory_rows(record))


def write_shape_csv(path, times, shapes) -> None:
    write_table(path, ["t"] + SHAPE_COLUMNS, np.column_stack([times, shapes]))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    return header, np.asarray(rows, dtype=float).reshape(-1, len(header))


def verify_trajectory_csv(path, tol: float = 1e-9) -> dict:
    """Re-check unit speed and frame orthonormality for every row of a trajectory CSV."""
    header, data = read_csv(path)
    if header != TRAJECTORY_COLUMNS:
        raise ValueError(f"{path}: header does not match the trajectory schema")
    if len(data) == 0:
        return {"rows": 0, "max_frame_error": 0.0, "max_unit_speed_error": 0.0, "tolerance": tol, "passed": True}
    frames = np.stack(
        [data[:, 1 + 12 * i + 3 : 1 + 12 * (i + 1)].reshape(-1, 3, 3) for i in range(2)], axis=1
    )
    speed = np.abs(np.linalg.norm(frames[:, :, 0, :], axis=-1) - 1.0)
    per_row = np.array([orthonormality_error(f) for f in frames])
    bad = np.nonzero((per_row >= tol) | (speed.max(axis=1) >= tol))[0]
    return {
        "rows": int(len(data)),
        "max_frame_error": float(per_row.max()),
        "max_unit_speed_error": float(speed.max()),
        "tolerance": tol,
        "failing_rows": [int(k) + 2 for k in bad[:20]],  # 1-based line numbers incl. header
        "passed": bool(len(bad) == 0),
    }


def write_json(path, document) -> None:
    Path(path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
