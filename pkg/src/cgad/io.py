"""CSV ingestion and export.

Layout: a header row, a ``timestamp`` column (integers or ISO-8601 strings,
strictly increasing), the sensor columns, and optionally a final ``label``
column holding 0/1.
"""

from __future__ import annotations

import csv
from datetime import datetime
from pathlib import Path
from typing import Optional

import numpy as np

from .core import CgadError, MultivariateSeries, validate_series


class CsvFormatError(CgadError, ValueError):
    pass


def _parse_time(raw: str, line: int):
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(raw).timestamp()
    except ValueError:
        raise CsvFormatError(f"line {line}: bad timestamp {raw!r}") from None


def read_series(path, require_labels: bool = False) -> MultivariateSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        if not header or header[0] != "timestamp":
            raise CsvFormatError("missing column: timestamp")
        has_labels = header[-1] == "label"
        if require_labels and not has_labels:
            raise CsvFormatError("missing column: label")
        names = header[1:-1] if has_labels else header[1:]
        width = len(header)
        times, rows, labels = [], [], []
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != width:
                raise CsvFormatError(f"line {line}: expected {width} fields, got {len(rec)}")
            times.append(_parse_time(rec[0].strip(), line))
            try:
                rows.append([float(v) for v in (rec[1:-1] if has_labels else rec[1:])])
            except ValueError as exc:
                raise CsvFormatError(f"line {line}: {exc}") from None
            if has_labels:
                lab = rec[-1].strip()
                if lab not in ("0", "1"):
                    raise CsvFormatError(f"line {line}: label must be 0 or 1, got {lab!r}")
                labels.append(int(lab))
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise CsvFormatError("timestamps must be strictly increasing")
    return validate_series(np.array(rows), names, labels if has_labels else None)


def write_series(path, series: MultivariateSeries, timestamps: Optional[list] = None,
                 include_labels: bool = True) -> None:
    """Write with ``repr`` floats so a read-back reproduces every value exactly."""
    labels = series.point_labels if include_labels else None
    header = ["timestamp", *series.sensor_names] + (["label"] if labels is not None else [])
    timestamps = range(series.n_steps) if timestamps is None else timestamps
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t, (ts, row) in enumerate(zip(timestamps, series.values)):
            rec = [str(ts), *(repr(float(v)) for v in row)]
            if labels is not None:
                rec.append(str(int(labels[t])))
            writer.writerow(rec)


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
