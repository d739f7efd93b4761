"""CSV ingestion/serialisation and key=value config files for the CLI."""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np

from .errors import MalformedRow
from .estimators import Dataset


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def load_csv(path: str | Path, orientation: str = "lower") -> Dataset:
    """Read a dataset from CSV with header ``x1,...,xp,y`` (p inferred).

    Raises MalformedRow with the offending 1-based line number on parse
    failures or non-finite values.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file") from None
        header = [h.strip() for h in header]
        p = len(header) - 1
        expected = [f"x{i + 1}" for i in range(p)] + ["y"]
        if p < 1 or header != expected:
            raise MalformedRow(1, f"header must be {','.join(expected) if p >= 1 else 'x1,...,xp,y'}")
        design = []
        response = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 1:
                raise MalformedRow(lineno, f"expected {p + 1} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise MalformedRow(lineno, "non-numeric value") from None
            if not all(np.isfinite(v) for v in vals):
                raise MalformedRow(lineno, "non-finite value")
            design.append(vals[:p])
            response.append(vals[p])
    if not design:
        raise MalformedRow(2, "no data rows")
    return Dataset(np.asarray(design), np.asarray(response), orientation=orientation)


def save_csv(data: Dataset, path: str | Path) -> None:
    """Write the observed data back out (round-trips with load_csv)."""
    path = Path(path)
    p = data.p
    lines = [",".join([f"x{i + 1}" for i in range(p)] + ["y"])]
    for row, y in zip(data.design, data.response):
        lines.append(",".join([_fmt(v) for v in row] + [_fmt(y)]))
    path.write_text("\n".join(lines) + "\n")


def write_table(path: str | Path | None, header: str, rows: list[list]) -> str:
    """Render rows under a pinned header with stable float formatting;
    write to ``path`` when given, return the text either way."""
    buf = _io.StringIO()
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def read_config(path: str | Path) -> dict:
    """key=value config file; blank lines and '#' comments ignored."""
    out: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, raw = stripped.split("=", 1)
        out[key.strip().replace("-", "_")] = _parse_value(raw)
    return out
