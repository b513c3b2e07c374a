"""CSV helpers shared by the exporters and the command line.

Floats are written in scientific notation with 17 significant digits so a
double survives a write/read round trip bit for bit.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool,)):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.16e}"


def render(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write(path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    text = render(header, rows)
    if path is not None:
        Path(path).write_text(text)
    return text


def read(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [row for row in reader if row]
    return header, rows
