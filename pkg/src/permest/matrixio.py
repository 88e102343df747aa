"""Matrix file formats.

CSV: one matrix row per line, comma-separated decimal numbers.
JSON: ``{"rows": n, "cols": m, "entries": [row-major numbers]}``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import MatrixParseError
from .matrix import DenseMatrix, as_array


def parse_csv(text: str) -> DenseMatrix:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        row = []
        column = 1
        for cell in line.split(","):
            token = cell.strip()
            try:
                value = float(token)
            except ValueError:
                raise MatrixParseError(f"not a number: {token!r}", lineno, column) from None
            if not math.isfinite(value):
                raise MatrixParseError(f"non-finite entry {token!r}", lineno, column)
            row.append(value)
            column += len(cell) + 1
        if rows and len(row) != len(rows[0]):
            raise MatrixParseError(
                f"row has {len(row)} entries, expected {len(rows[0])}", lineno, 1
            )
        rows.append(row)
    if not rows:
        raise MatrixParseError("empty matrix file")
    return DenseMatrix(rows)


def parse_json(text: str) -> DenseMatrix:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or not {"rows", "cols", "entries"} <= set(doc):
        raise MatrixParseError("JSON matrix needs 'rows', 'cols' and 'entries'")
    rows, cols, entries = doc["rows"], doc["cols"], doc["entries"]
    if not (isinstance(rows, int) and isinstance(cols, int) and rows > 0 and cols > 0):
        raise MatrixParseError("'rows' and 'cols' must be positive integers")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise MatrixParseError(f"'entries' must be a list of {rows}*{cols} numbers")
    for k, value in enumerate(entries):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise MatrixParseError(f"entry {k} is not a finite number: {value!r}")
    return DenseMatrix.from_entries(rows, cols, entries)


def _is_json(path: Path, text: str) -> bool:
    if path.suffix.lower() == ".json":
        return True
    if path.suffix.lower() == ".csv":
        return False
    return text.lstrip().startswith("{")


def read_matrix(path) -> DenseMatrix:
    path = Path(path)
    text = path.read_text()
    return parse_json(text) if _is_json(path, text) else parse_csv(text)


def format_csv(matrix) -> str:
    arr = as_array(matrix)
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in arr)


def format_json(matrix) -> str:
    arr = as_array(matrix)
    doc = {"rows": arr.shape[0], "cols": arr.shape[1], "entries": arr.ravel().tolist()}
    return json.dumps(doc) + "\n"


def write_matrix(matrix, path, fmt=None):
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    path.write_text(format_json(matrix) if fmt == "json" else format_csv(matrix))
