"""Verification reports and their serializations (JSON, CSV, SVG)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import UsageError


@dataclass
class Table:
    columns: tuple
    rows: list

    def as_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()


@dataclass
class Report:
    """Outcome of one verification step.

    ``checks`` holds the required boolean assertions; ``passed`` is their
    conjunction. ``measured`` carries the empirical constants, ``details``
    anything useful for diagnosis (witnesses, per-level breakdowns).
    """

    kind: str
    anchor: str
    checks: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def check(self, name: str, ok) -> bool:
        self.checks[name] = bool(ok)
        return bool(ok)

    def to_dict(self) -> dict:
        return canonical({
            "kind": self.kind,
            "anchor": self.anchor,
            "passed": self.passed,
            "checks": self.checks,
            "measured": self.measured,
            "details": self.details,
            "flags": self.flags,
            "tables": {k: {"columns": list(t.columns), "rows": t.rows}
                       for k, t in self.tables.items()},
        })

    def to_json(self) -> str:
        return dumps(self.to_dict())


def canonical(obj: Any) -> Any:
    """Convert numpy types, sets and non-finite floats into plain JSON data."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return [canonical(v) for v in sorted(obj)]
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, Report):
        return obj.to_dict()
    return obj


def dumps(data: Any) -> str:
    return json.dumps(canonical(data), sort_keys=True, indent=2) + "\n"


def _csv_cell(v):
    v = canonical(v)
    return v


def emit_report(report: Report, fmt: str, stem: str | Path) -> list[Path]:
    """Write ``report`` as ``fmt`` next to ``stem``; returns the files written."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = stem.with_suffix(".json")
        path.write_text(report.to_json())
        return [path]
    if fmt not in ("csv", "svg"):
        raise UsageError(f"unsupported report format {fmt!r}")
    if not report.tables:
        raise UsageError(f"report kind {report.kind!r} has no tabular data for {fmt}")
    written = []
    for name, table in sorted(report.tables.items()):
        path = stem.parent / f"{stem.name}_{name}.{fmt}"
        if fmt == "csv":
            path.write_text(table.as_csv())
        elif _numeric_rows(table):
            path.write_text(svg_plot(table, title=f"{report.kind}: {name}"))
        else:
            continue
        written.append(path)
    if not written:
        raise UsageError(f"report kind {report.kind!r} has no numeric table to plot")
    return written


def _numeric_rows(table: Table) -> list:
    rows = []
    for row in table.rows:
        try:
            rows.append([float(v) for v in row])
        except (TypeError, ValueError):
            continue
    return rows


def svg_plot(table: Table, title: str = "", width: int = 480, height: int = 320) -> str:
    """Line plot of every numeric column against the first one."""
    cols = list(table.columns)
    data = _numeric_rows(table)
    if not data:
        raise UsageError("table has no numeric rows to plot")
    arr = np.array(data, dtype=float)
    arr[~np.isfinite(arr)] = np.nan
    x = arr[:, 0]
    ys = arr[:, 1:]
    pad = 40
    xmin, xmax = np.nanmin(x), np.nanmax(x)
    ymin, ymax = np.nanmin(ys), np.nanmax(ys)
    if xmax == xmin:
        xmax = xmin + 1.0
    if ymax == ymin:
        ymax = ymin + 1.0

    def sx(v):
        return pad + (v - xmin) / (xmax - xmin) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - ymin) / (ymax - ymin) * (height - 2 * pad)

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 14}" font-size="10">{xmin:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 14}" font-size="10" text-anchor="end">{xmax:.4g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{ymin:.4g}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{ymax:.4g}</text>',
    ]
    for j in range(ys.shape[1]):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, ys[:, j]) if np.isfinite(b))
        color = palette[j % len(palette)]
        out.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
        out.append(f'<text x="{width - pad}" y="{pad + 14 * j}" font-size="10" fill="{color}" '
                   f'text-anchor="end">{_esc(cols[j + 1])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
