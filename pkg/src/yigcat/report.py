"""Deterministic JSON and CSV writers.

Both formats carry the schema version: JSON as a top-level
``schema_version`` key, CSV as a leading ``# schema_version=N`` line.
Floats are written with ``repr`` so the bytes depend only on the values.
Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``
in JSON (which has no literal for them) and the same text in CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION

__all__ = ["to_jsonable", "dumps_json", "write_json", "format_csv", "write_csv", "read_csv"]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, (frozenset, set)):
        return sorted(to_jsonable(v) for v in obj)
    return obj


def dumps_json(payload: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION, **to_jsonable(payload)}
    return json.dumps(body, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def write_json(path: str | Path, payload: dict) -> Path:
    return _write_text(path, dumps_json(payload))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def format_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(col) for col in columns]
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, columns, rows) -> Path:
    return _write_text(path, format_csv(columns, rows))


def read_csv(path: str | Path) -> tuple[int, list[dict]]:
    """Schema version and rows (as strings) of a file written by ``write_csv``."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema_version="):
            raise ValueError(f"{path}: missing schema_version line")
        version = int(first.split("=", 1)[1])
        return version, list(csv.DictReader(fh))
