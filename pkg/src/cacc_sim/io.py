"""Trace CSV, summary and plot-data files.

Trace CSV: UTF-8, LF line endings, header row, one row per vehicle per
step in the column order of ``TRACE_COLUMNS``. Floats are written with
``repr`` (round-trip precision); undefined values (lead-vehicle range,
for instance) are empty fields.
"""

from __future__ import annotations

import csv
import math
import os
from pathlib import Path

import numpy as np

from .metrics import MetricsReport
from .scenario import MODES, TRACE_COLUMNS, CollisionEvent, ScenarioSpec, SimTrace

PLOT_QUANTITIES = {"acceleration": "a", "velocity": "v", "relative_distance": "R",
                   "spacing_error": "spacing_error"}
_FLOAT_COLUMNS = [c for c in TRACE_COLUMNS if c not in ("t", "vehicle", "mode")]


def _f(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_trace_csv(trace: SimTrace, path) -> Path:
    path = Path(path)
    arrays = [trace.column(c) for c in _FLOAT_COLUMNS]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for k in range(trace.n_steps):
            t = repr(float(trace.t[k]))
            for i in range(trace.n_vehicles):
                m = int(trace.mode[k, i])
                mode = MODES[m].value if m >= 0 else "Imposed"
                vals = [_f(arr[k, i]) for arr in arrays]
                writer.writerow([t, i, *vals[:4], mode, *vals[4:]])
    return path


def read_trace_csv(path, spec: ScenarioSpec) -> SimTrace:
    """Load a trace written by ``write_trace_csv`` back into arrays."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace columns {header}")
        rows = list(reader)
    n = 1 + max(int(r[1]) for r in rows)
    steps = len(rows) // n
    idx = {c: j for j, c in enumerate(TRACE_COLUMNS)}
    mode_code = {m.value: i for i, m in enumerate(MODES)}
    cols = {c: np.full((steps, n), np.nan) for c in _FLOAT_COLUMNS}
    mode = np.full((steps, n), -1, dtype=np.int8)
    t = np.empty(steps)
    for r_i, row in enumerate(rows[: steps * n]):
        k, i = divmod(r_i, n)
        t[k] = float(row[0])
        for c in _FLOAT_COLUMNS:
            cell = row[idx[c]]
            if cell:
                cols[c][k, i] = float(cell)
        mode[k, i] = mode_code.get(row[idx["mode"]], -1)
    collision = None
    R = cols["R"][-1, 1:] if steps else np.array([])
    if R.size and np.nanmin(R) <= 0:
        i = int(np.nanargmin(R)) + 1
        collision = CollisionEvent(steps - 1, float(t[-1]), i, float(R[i - 1]))
    return SimTrace(spec, t, mode=mode, collision=collision, **cols)


def summary_lines(report: MetricsReport) -> list[str]:
    lines = [
        f"scenario = {report.scenario}",
        f"controller = {report.controller}",
        f"h = {report.h!r}",
        f"window = {report.window[0]!r}, {report.window[1]!r}",
        f"collision = {str(report.collision).lower()}",
        f"string_stable = {'' if report.string_stable is None else str(report.string_stable).lower()}",
        f"tfc = {report.tfc!r}",
        "amplification_ratios = " + ", ".join(repr(r) for r in report.amplification_ratios),
        "velocity_ratios = " + ", ".join(repr(r) for r in report.velocity_ratios),
    ]
    for vm in report.vehicles:
        for key in ("rms_accel", "min_R", "min_spacing_error", "accel_amplitude", "velocity_amplitude"):
            lines.append(f"vehicle.{vm.vehicle}.{key} = {getattr(vm, key)!r}")
    return lines


def write_summary(report: MetricsReport, path) -> Path:
    path = Path(path)
    path.write_text("\n".join(summary_lines(report)) + "\n", encoding="utf-8")
    return path


def write_plot_data(trace: SimTrace, directory) -> list[Path]:
    """Two-column ``t value`` files, one per quantity and vehicle."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, col in PLOT_QUANTITIES.items():
        data = trace.column(col)
        for i in range(trace.n_vehicles):
            series = data[:, i]
            if np.all(np.isnan(series)):
                continue
            path = directory / f"{name}_v{i}.dat"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(f"# t {name}\n")
                for t, val in zip(trace.t, series):
                    if not math.isnan(val):
                        fh.write(f"{t!r} {float(val)!r}\n")
            written.append(path)
    return written


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
