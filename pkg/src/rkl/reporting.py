"""Deterministic JSON/CSV serialization and config hashing."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .convergence import CSV_COLUMNS, ConvergenceReport


def to_jsonable(obj):
    """Convert results to plain JSON types; complex numbers become ``{"re", "im"}``."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return {"re": z.real, "im": z.imag}
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()] if obj.dtype != complex else [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        items = sorted(obj) if isinstance(obj, set) else obj
        return [to_jsonable(v) for v in items]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj):
        return to_jsonable(dataclasses.asdict(obj))
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(config) -> str:
    """SHA-256 of the canonical JSON form of a resolved config."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def dumps_json(payload) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def dumps_csv(header: Sequence[str], rows: Iterable[Sequence], cfg_hash: str | None = None) -> str:
    buf = io.StringIO()
    if cfg_hash is not None:
        buf.write(f"# config_hash: {cfg_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def report_csv(report: ConvergenceReport, cfg_hash: str | None = None) -> str:
    """One row per ``(n, lambda)`` with the fixed study columns."""
    return dumps_csv(CSV_COLUMNS, report.csv_rows(), cfg_hash)


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_report(report, fmt: str, path, config=None) -> Path:
    """Write a study report as ``csv`` or ``json``; both embed the config hash."""
    cfg_hash = config_hash(config if config is not None else {})
    if fmt == "csv":
        if not isinstance(report, ConvergenceReport):
            raise TypeError("CSV output needs a convergence report")
        return write_text(path, report_csv(report, cfg_hash))
    if fmt == "json":
        payload = {"config_hash": cfg_hash, "config": config, "result": report}
        return write_text(path, dumps_json(payload))
    raise ValueError(f"unknown format {fmt!r}")


def read_report_json(path) -> ConvergenceReport:
    with open(path) as fh:
        data = json.load(fh)
    return ConvergenceReport.from_dict(data["result"])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a report CSV, skipping ``#`` comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
