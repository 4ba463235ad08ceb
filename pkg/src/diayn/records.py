"""Tab-separated record files: one header line, then one row per record.

Floats are written with 9 significant digits so files are stable across runs.
"""
from __future__ import annotations

import math
import os

from .errors import FormatError


def format_value(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.9g}"
    try:
        return format_value(v.item())  # numpy scalars
    except AttributeError:
        return str(v)


def parse_value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def write_records(path, records, fields=None):
    """Write dict records; ``fields`` fixes the column order (default: first record's keys)."""
    records = list(records)
    if fields is None:
        fields = list(records[0]) if records else []
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(fields) + "\n")
        for rec in records:
            fh.write("\t".join(format_value(rec[f]) for f in fields) + "\n")
    return path


def read_records(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: missing header line")
    header = lines[0].split("\t")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise FormatError(f"{path}:{i}: expected {len(header)} fields, found {len(cells)}")
        out.append({h: parse_value(c) for h, c in zip(header, cells)})
    return out
