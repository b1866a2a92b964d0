"""Deterministic CSV reports and field snapshots.

Numbers are written with ``repr`` (shortest round-trip decimal), booleans as
``true``/``false``, absent values as empty cells, and lines end with ``\\n``.
"""
from __future__ import annotations

import csv
import os

import numpy as np

from .fields import ScalarField
from .geometry import GeometrySummary

REPORT_COLUMNS = ("t", "theta", "R_i", "cx_i", "cy_i", "R_e", "cx_e", "cy_e", "r_origin", "gap",
                  "star_shaped", "max_polar_slope", "radial_dev", "solution_id")
VERDICT_COLUMNS = ("name", "inequality", "measured", "bound", "status", "expected", "note")


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return repr(float(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse_float(s):
    return None if s == "" else float(s)


def _parse_bool(s):
    if s == "":
        return None
    if s not in ("true", "false"):
        raise ValueError(f"bad boolean cell {s!r}")
    return s == "true"


def summary_to_row(s: GeometrySummary):
    ci = s.center_i or (None, None)
    ce = s.center_e or (None, None)
    vals = (s.t, s.theta, s.R_i, ci[0], ci[1], s.R_e, ce[0], ce[1], s.r_origin, s.gap,
            s.star_shaped, s.max_polar_slope, s.radial_dev)
    return [format_value(v) for v in vals] + [s.solution_id]


def row_to_summary(row: dict) -> GeometrySummary:
    f = {k: _parse_float(row[k]) for k in REPORT_COLUMNS
         if k not in ("star_shaped", "solution_id")}
    ci = None if f["cx_i"] is None else (f["cx_i"], f["cy_i"])
    ce = None if f["cx_e"] is None else (f["cx_e"], f["cy_e"])
    return GeometrySummary(f["t"], f["theta"], f["R_i"], ci, f["R_e"], ce, f["r_origin"],
                           _parse_bool(row["star_shaped"]), f["max_polar_slope"],
                           f["radial_dev"], row["solution_id"])


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_report(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(REPORT_COLUMNS)
        for s in rows:
            w.writerow(summary_to_row(s))


def read_report(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [row_to_summary(r) for r in reader]


def write_verdicts(verdicts, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(VERDICT_COLUMNS)
        for v in verdicts:
            w.writerow([v.name, v.inequality, format_value(v.measured), format_value(v.bound),
                        v.status, v.expected, v.note])


def snapshot_name(prefix, time):
    return f"{prefix}_t{time:.4f}"


def _image(field: ScalarField):
    """Rows from top (largest y) to bottom, columns from left (smallest x)."""
    return field.values.T[::-1]


def write_pgm(field: ScalarField, path):
    """8-bit plain PGM, values scaled by the field maximum (all zero if max <= 0)."""
    img = _image(field)
    top = img.max()
    scaled = np.zeros(img.shape, dtype=int) if top <= 0 else \
        np.clip(np.rint(255 * np.clip(img, 0, None) / top), 0, 255).astype(int)
    h, w = scaled.shape
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for line in scaled:
            fh.write(" ".join(map(str, line)) + "\n")


def read_pgm(path):
    with open(path, encoding="ascii") as fh:
        tokens = fh.read().split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array(tokens[4:], dtype=int).reshape(h, w)
    return data, maxval


def write_grid_csv(field: ScalarField, path):
    """Raw node values, same orientation as the PGM image."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        for line in _image(field):
            w.writerow([repr(float(v)) for v in line])


def write_snapshot(field: ScalarField, directory, prefix):
    base = os.path.join(directory, snapshot_name(prefix, field.time))
    write_pgm(field, base + ".pgm")
    write_grid_csv(field, base + ".csv")
    return base
