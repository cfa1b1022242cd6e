"""Panel CSV files and JSON / CSV result files.

Panel CSV layout: the first row holds the unit labels, every later row is
one time point (``T x N`` on disk). Values use ``.`` as decimal separator;
empty cells and ``NA``/``NaN`` mark missing values. Panels are transposed
to ``N x T`` on load.

Floats are written with ``repr`` (shortest round-trip form), so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .simulate import Panel

SCHEMA_VERSION = 1
MISSING = {"", "na", "nan", "null"}


class PanelFormatError(ValueError):
    """Malformed panel CSV; the message names the offending row and column."""


def _parse_cell(text: str, row: int, col: int) -> float:
    s = text.strip()
    if s.lower() in MISSING:
        return math.nan
    try:
        val = float(s)
    except ValueError:
        raise PanelFormatError(f"row {row}, column {col}: cannot parse {text!r} as a number") from None
    if math.isinf(val):
        raise PanelFormatError(f"row {row}, column {col}: infinite value")
    return val


def interpolate_missing(values: np.ndarray, labels) -> np.ndarray:
    """Linear interpolation in time per unit; leading/trailing gaps take the nearest value."""
    out = values.copy()
    t = np.arange(values.shape[1])
    for i in range(values.shape[0]):
        bad = np.isnan(out[i])
        if bad.all():
            raise PanelFormatError(f"unit {labels[i]!r} has no observed values to interpolate from")
        if bad.any():
            out[i, bad] = np.interp(t[bad], t[~bad], out[i, ~bad])
    return out


def read_panel_csv(path, interpolate: bool = False) -> Panel:
    """Load a panel CSV. Rows and columns in messages are 1-based file positions."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PanelFormatError("empty file")
    labels = [s.strip() for s in rows[0]]
    if not labels or any(not s for s in labels):
        raise PanelFormatError("row 1: missing unit label")
    if len(set(labels)) != len(labels):
        raise PanelFormatError("row 1: duplicate unit labels")
    n = len(labels)
    data = []
    for r, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != n:
            raise PanelFormatError(f"row {r}: expected {n} columns (from the header), found {len(row)}")
        data.append([_parse_cell(cell, r, c) for c, cell in enumerate(row, start=1)])
    if len(data) < 2:
        raise PanelFormatError("need at least two time points")
    values = np.array(data, dtype=float).T
    missing = np.argwhere(np.isnan(values))
    if missing.size:
        if not interpolate:
            cells = ", ".join(f"(row {t + 2}, column {i + 1})" for i, t in missing[:20])
            more = "" if len(missing) <= 20 else f" and {len(missing) - 20} more"
            raise PanelFormatError(f"missing values at {cells}{more}; use --interpolate to fill them")
        values = interpolate_missing(values, labels)
    return Panel(values, labels)


def write_panel_csv(panel: Panel, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(panel.unit_labels)
        for col in panel.values.T:
            w.writerow([repr(float(x)) for x in col])


def to_jsonable(obj):
    """Convert numpy values, dataclass-like containers and NaN for JSON output."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_table_csv(header, rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if isinstance(v, float) and not math.isfinite(v) else
                        (repr(v) if isinstance(v, float) else v) for v in row])
