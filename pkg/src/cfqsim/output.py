"""Deterministic JSON and CSV serialisation.

JSON keeps insertion order (callers build documents in registry/outcome
order) and writes every float with 17 significant digits, so documents
round-trip exactly. Non-finite floats become ``null``. CSV uses a header
row, minimal RFC-4180 quoting and LF line endings.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import OutputError


def format_float(x: float) -> Optional[str]:
    if not math.isfinite(x):
        return None
    if x == 0:
        return "0.0" if math.copysign(1.0, x) > 0 else "-0.0"
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def to_plain(obj: Any) -> Any:
    """Convert dataclasses, numpy scalars/arrays, tuples and complex numbers to JSON types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k) if not isinstance(k, tuple) else "/".join(map(str, k)): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    raise OutputError(f"cannot serialise {type(obj).__name__}")


def _dump(obj: Any, out: list[str]) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(k))
            out.append(": ")
            _dump(v, out)
        out.append("}")
    elif isinstance(obj, list):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _dump(v, out)
        out.append("]")
    elif isinstance(obj, float):
        s = format_float(obj)
        out.append("null" if s is None else s)
    else:
        out.append(json.dumps(obj))


def to_json(document: Any) -> str:
    out: list[str] = []
    _dump(to_plain(document), out)
    out.append("\n")
    return "".join(out)


def _csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        s = format_float(float(v))
        return "" if s is None else s
    return str(v)


def to_csv(rows: Iterable[Mapping[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def emit(payload: Any, fmt: str = "json", columns: Optional[Sequence[str]] = None) -> bytes:
    """Serialise a document (JSON) or a list of row dicts (CSV) to bytes."""
    if fmt == "json":
        return to_json(payload).encode("utf-8")
    if fmt == "csv":
        if isinstance(payload, Mapping):
            rows = payload.get("rows")
            if rows is None:
                rows = [payload]
        else:
            rows = list(payload)
        rows = [to_plain(r) if not isinstance(r, Mapping) else r for r in rows]
        if columns is None:
            columns = list(rows[0]) if rows else []
        return to_csv(rows, columns).encode("utf-8")
    raise OutputError(f"unknown format {fmt!r}")


def write(data: bytes, out: Optional[str], stream) -> None:
    if out is None:
        stream.write(data)
        stream.flush()
        return
    try:
        Path(out).write_bytes(data)
    except OSError as exc:
        raise OutputError(f"cannot write {out}: {exc}") from exc
