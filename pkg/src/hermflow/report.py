"""report.json / series.csv emission with deterministic ordering."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ReportIOError
from .flow import FlowReport

REPORT_NAME = "report.json"
SERIES_NAME = "series.csv"


def to_jsonable(obj):
    """Plain JSON types only; keys starting with '_' are dropped, non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items() if not str(k).startswith("_")}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def check(value, threshold, passed: bool, relation: str = "<=") -> dict:
    return {"value": value, "threshold": threshold, "relation": relation, "pass": bool(passed)}


def build_report(command: str, config: dict, results: dict, checks: dict | None = None) -> dict:
    checks = checks or {}
    return to_jsonable({
        "version": __version__,
        "command": command,
        "config": config,
        "results": results,
        "checks": checks,
        "all_pass": all(c.get("pass", False) for c in checks.values()),
    })


def _write(path: Path, writer) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer(fh)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_series(path: str | Path, rows: list[dict], columns: tuple | list | None = None) -> Path:
    """CSV with one row per record; an empty series gives the header only."""
    path = Path(path)
    cols = list(columns) if columns is not None else (list(rows[0]) if rows else list(FlowReport.SERIES))

    def go(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in cols])

    _write(path, go)
    return path


def _cell(v):
    v = to_jsonable(v)
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def emit_report(out_dir: str | Path, command: str, config: dict, results: dict, series: list[dict] | None = None,
                checks: dict | None = None, columns=None) -> tuple[Path, Path]:
    out = Path(out_dir)
    report = build_report(command, config, results, checks)
    text = json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"
    rpath = out / REPORT_NAME
    _write(rpath, lambda fh: fh.write(text))
    spath = write_series(out / SERIES_NAME, series or [], columns)
    return rpath, spath
