"""File formats: profile/snapshot/trajectory CSVs and JSON reports.

All floating-point values are written in full round-trip precision so that
re-running a command from its echoed config reproduces outputs bit-for-bit.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .solver import Field, Grid, Trajectory

_FMT = "%.17g"


def _fmt(v: float) -> str:
    return _FMT % v


def write_profile_csv(path, x: np.ndarray, u: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("x,u\n")
        for xi, ui in zip(x, u):
            fh.write(f"{_fmt(xi)},{_fmt(ui)}\n")


def read_profile_csv(path) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float, ndmin=2)
    if data.shape[1] != 2:
        raise ConfigError(f"{path}: expected two columns (x, u)")
    x, u = data[:, 0], data[:, 1]
    n = len(x)
    dx = np.diff(x)
    if n < 16 or not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
        raise ConfigError(f"{path}: nodes are not a uniform grid")
    half_length = -x[0]
    grid = Grid(half_length, n)
    if not np.allclose(grid.x, x, rtol=0, atol=1e-9 * max(1.0, half_length)):
        raise ConfigError(f"{path}: nodes do not match a symmetric grid -L + j*dx")
    return Field(grid, u)


def snapshot_name(t: float) -> str:
    return f"snap_t{t:.6f}.csv"


def write_trajectory_csv(path, trajectory: Trajectory) -> None:
    with open(path, "w") as fh:
        fh.write("t,front_x,sup_norm,l2_grad\n")
        for t, fx, sn, lg in zip(trajectory.times, trajectory.front_positions,
                                 trajectory.sup_norms, trajectory.l2_grads):
            fxs = _fmt(fx) if math.isfinite(fx) else "nan"
            fh.write(f"{_fmt(t)},{fxs},{_fmt(sn)},{_fmt(lg)}\n")


def _jsonable(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dump_json(payload: dict, path=None) -> str:
    text = json.dumps(_jsonable(payload), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def write_sweep_csv(path, rows: list[dict]) -> None:
    """Phase-diagram table, one row per (mu, c) cell in lexicographic order."""
    cols = ["mu", "c", "kernel", "left_state", "right_state", "c_bar",
            "condition_8", "sup_norm", "steady_residual", "energy_residual",
            "stop_reason", "tail_mass", "error"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            out = []
            for col in cols:
                v = row.get(col)
                if v is None:
                    out.append("")
                elif isinstance(v, bool):
                    out.append(str(v).lower())
                elif isinstance(v, float):
                    out.append(_fmt(v) if math.isfinite(v) else "nan")
                else:
                    out.append(str(v))
            fh.write(",".join(out) + "\n")
