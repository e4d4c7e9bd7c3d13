"""CSV/JSON reading and atomic writing.

Tables are comma separated with one header row; lines starting with ``#``
and blank lines are skipped. Every parse failure reports ``path:line``.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataFormatError

FLOAT_FORMAT = "{:.10g}"


def fmt(x) -> str:
    """Deterministic text for numbers (and passthrough for strings)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if x == 0.0:
            return "0"
        return FLOAT_FORMAT.format(x)
    return str(x)


def read_table(path, required: list, optional: tuple = ()) -> dict:
    """Read a numeric CSV into ``{column: ndarray}``.

    Columns beyond ``required`` and ``optional`` are ignored. Non-numeric
    cells in numeric columns raise :class:`DataFormatError` with the line.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read file: {exc.strerror}", path=str(path)) from exc
    header = None
    header_line = 0
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader([line]))]
        if header is None:
            header, header_line = cells, lineno
            missing = [c for c in required if c not in header]
            if missing:
                raise DataFormatError(f"missing required column(s) {missing}; header is {header}",
                                      line=lineno, path=str(path))
            continue
        if len(cells) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, found {len(cells)}",
                                  line=lineno, path=str(path))
        rows.append((lineno, cells))
    if header is None:
        raise DataFormatError("no header row", line=1, path=str(path))
    wanted = [c for c in list(required) + list(optional) if c in header]
    out = {c: [] for c in wanted}
    for lineno, cells in rows:
        for c in wanted:
            cell = cells[header.index(c)]
            try:
                out[c].append(float(cell))
            except ValueError:
                raise DataFormatError(f"column {c!r}: not a number: {cell!r}",
                                      line=lineno, path=str(path)) from None
    result = {c: np.asarray(v, dtype=float) for c, v in out.items()}
    result["_lines"] = np.asarray([ln for ln, _ in rows], dtype=int)
    result["_header_line"] = header_line
    return result


def read_rows(path, required: list) -> list:
    """Read a CSV as a list of ``(line, {column: text})`` with header checks."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read file: {exc.strerror}", path=str(path)) from exc
    header = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader([line]))]
        if header is None:
            header = cells
            missing = [c for c in required if c not in header]
            if missing:
                raise DataFormatError(f"missing required column(s) {missing}",
                                      line=lineno, path=str(path))
            continue
        if len(cells) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, found {len(cells)}",
                                  line=lineno, path=str(path))
        rows.append((lineno, dict(zip(header, cells))))
    if header is None:
        raise DataFormatError("no header row", line=1, path=str(path))
    return rows


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header: list, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_csv(path, header: list, rows) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(FLOAT_FORMAT.format(x))
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json_text(obj))
