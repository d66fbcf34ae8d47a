"""Readers and writers for records, histories and result tables.

Tables are written as CSV (a ``# config`` comment line, a header, then one
row per node with 17 significant digits) or as JSON::

    {"config": {...}, "columns": ["phi", "density"], "rows": [[...], ...],
     "extra": {"tail_bound": ...}}

Scalar results use ``{"config": {...}, "result": {"probability": p}}`` in
JSON and ``quantity,value`` rows in CSV.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from .laser_phase import DetectionEvent, DetectionHistory
from .spin_bayes import SpinRecord

_HISTORY_FIELDS = ("time", "m_c", "m_d")


def fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def read_record(path):
    """SpinRecord from JSON ``{"x": [plus, minus], "y": [...], "z": [...]}``."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("record file must hold a JSON object")
    return SpinRecord.from_dict(data)


def write_record(record):
    return json.dumps(record.to_dict(), sort_keys=True) + "\n"


def _event(row):
    unknown = set(row) - set(_HISTORY_FIELDS)
    missing = set(_HISTORY_FIELDS) - set(row)
    if unknown or missing:
        raise ValueError(f"history rows need exactly {_HISTORY_FIELDS}; "
                         f"unknown={sorted(unknown)} missing={sorted(missing)}")
    m_c, m_d = float(row["m_c"]), float(row["m_d"])
    if m_c != int(m_c) or m_d != int(m_d):
        raise ValueError(f"counts must be integers: {row}")
    return DetectionEvent(float(row["time"]), int(m_c), int(m_d))


def parse_history(text, kind):
    if kind == "json":
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("history JSON must be an array of {time, m_c, m_d}")
        rows = data
    elif kind == "csv":
        rows = list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))
    else:
        raise ValueError(f"unknown history format {kind!r}")
    return DetectionHistory(tuple(_event(r) for r in rows))


def read_history(path):
    """DetectionHistory from a ``.json`` array or a ``time,m_c,m_d`` CSV file."""
    path = Path(path)
    kind = "csv" if path.suffix.lower() == ".csv" else "json"
    return parse_history(path.read_text(), kind)


def history_text(history, kind="json"):
    if kind == "json":
        return json.dumps(history.to_records()) + "\n"
    buf = io.StringIO()
    buf.write(",".join(_HISTORY_FIELDS) + "\n")
    for e in history:
        buf.write(f"{fmt(e.time)},{e.m_c},{e.m_d}\n")
    return buf.getvalue()


def table_text(columns, kind, config=None, extra=None):
    """Serialize equal-length columns (dict name -> array)."""
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    if kind == "json":
        rows = [[c[i].item() for c in cols] for i in range(len(cols[0]))]
        doc = {"config": config or {}, "columns": names, "rows": rows}
        if extra:
            doc["extra"] = extra
        return json.dumps(doc, sort_keys=False) + "\n"
    if kind != "csv":
        raise ValueError(f"unknown output format {kind!r}")
    out = io.StringIO()
    if config is not None:
        out.write("# config " + json.dumps(config, sort_keys=True) + "\n")
    if extra:
        for k, v in extra.items():
            out.write(f"# {k} {fmt(v)}\n")
    out.write(",".join(names) + "\n")
    for i in range(len(cols[0])):
        out.write(",".join(fmt(c[i]) for c in cols) + "\n")
    return out.getvalue()


def scalar_text(values, kind, config=None):
    """Serialize named scalar results."""
    if kind == "json":
        return json.dumps({"config": config or {}, "result": values}) + "\n"
    return table_text({"quantity": np.array(list(values), dtype=object),
                       "value": np.array(list(values.values()), dtype=float)}, "csv", config)


def table_from_csv(text):
    """Columns (name -> array) from CSV written by :func:`table_text`.

    Numeric columns come back as float arrays, others as string arrays.
    """
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.reader(lines)
    names = next(reader)
    rows = list(reader)
    out = {}
    for i, n in enumerate(names):
        col = [row[i] for row in rows]
        try:
            out[n] = np.array([float(v) for v in col])
        except ValueError:
            out[n] = np.array(col)
    return out
