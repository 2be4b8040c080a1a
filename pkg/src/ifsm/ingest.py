"""CSV time-series symbolisation, PGM images and JSON reports.

Relative changes ``r = (v_t − v_{t−1}) / v_{t−1}`` fall into half-open bands::

    A: r < −threshold      B: −threshold <= r < 0
    C: 0 <= r < threshold  D: r >= threshold
"""
from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chaos import ImageGrid
from .config import dump_config
from .errors import IoError, NonNumericCell, NonPositiveDensity, TooShort, ZeroPreviousValue
from .grid import DomainBox
from .model import ConstantDensity, ParameterSet, SystemSpec
from .systems import MARKET_LABELS, quadrant_maps

DEFAULT_THRESHOLD = 1e-4


@dataclass(frozen=True)
class SymbolSeries:
    symbols: str
    frequencies: dict
    source_length: int

    def __len__(self):
        return len(self.symbols)

    def frequency_vector(self) -> tuple:
        return tuple(self.frequencies[s] for s in MARKET_LABELS)


def symbolize(values, threshold: float = DEFAULT_THRESHOLD, first_row: int = 1) -> SymbolSeries:
    """Band the relative changes of ``values``; ``first_row`` numbers the first value in errors."""
    if threshold <= 0 or not math.isfinite(threshold):
        raise ValueError("threshold must be a positive finite number")
    values = [float(v) for v in values]
    if len(values) < 2:
        raise TooShort(f"need at least 2 values, got {len(values)}")
    out = []
    for t in range(1, len(values)):
        prev = values[t - 1]
        if prev == 0:
            raise ZeroPreviousValue(first_row + t - 1)
        r = (values[t] - prev) / prev
        if r < -threshold:
            out.append("A")
        elif r < 0:
            out.append("B")
        elif r < threshold:
            out.append("C")
        else:
            out.append("D")
    counts = Counter(out)
    freqs = {s: counts.get(s, 0) / len(out) for s in MARKET_LABELS}
    return SymbolSeries("".join(out), freqs, len(values))


def _is_number(cell: str) -> bool:
    try:
        return math.isfinite(float(cell))
    except ValueError:
        return False


def read_column(csv_path, column=0) -> tuple:
    """Values of one CSV column as ``(values, file line of the first value)``.

    ``column`` is an index or a header name. A first row whose selected cell
    is not numeric is taken as a header. Errors report 1-based file lines.
    """
    try:
        with open(csv_path, newline="") as fh:
            rows = [r for r in csv.reader(fh)]
    except OSError as exc:
        raise IoError(f"cannot read {csv_path}: {exc}") from exc
    lines = [(k + 1, r) for k, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not lines:
        raise TooShort("CSV file has no rows")
    idx = column
    header = None
    first_line, first = lines[0]
    if isinstance(column, str):
        header = [c.strip() for c in first]
        if column not in header:
            raise KeyError(f"no column named {column!r}")
        idx = header.index(column)
        lines = lines[1:]
    elif idx >= len(first) or not _is_number(first[idx]):
        lines = lines[1:]
    values = []
    for line, row in lines:
        cell = row[idx].strip() if idx < len(row) else ""
        if not _is_number(cell):
            raise NonNumericCell(line, cell)
        values.append(float(cell))
    start = lines[0][0] if lines else first_line
    return values, start


def ingest_timeseries(csv_path, threshold: float = DEFAULT_THRESHOLD, column=0) -> SymbolSeries:
    values, start = read_column(csv_path, column)
    return symbolize(values, threshold, first_row=start)


def series_spec(series: SymbolSeries, name: str = "ingested") -> SystemSpec:
    """Constant-probability quadrant system whose branch frequencies are the observed ones."""
    p = np.array(series.frequency_vector())
    return SystemSpec(
        DomainBox((0.0, 0.0), (1.0, 1.0)),
        ParameterSet.uniform(MARKET_LABELS),
        quadrant_maps(),
        density=ConstantDensity(4.0 * p),
        name=name,
    )


def emit_config(series: SymbolSeries, path, name: str = "ingested", grid=None) -> None:
    """Write :func:`series_spec` as a config; every band must have been observed."""
    missing = [s for s in MARKET_LABELS if series.frequencies[s] == 0]
    if missing:
        raise NonPositiveDensity(f"bands never observed: {', '.join(missing)}; "
                                 "branch probabilities must be strictly positive")
    dump_config(series_spec(series, name), path, grid)


# -- writers ---------------------------------------------------------------


def pgm_bytes(image: ImageGrid) -> bytes:
    px = np.asarray(image.pixels)
    if px.size == 0:
        raise ValueError("image is empty")
    lines = ["P2", f"{image.width} {image.height}", str(image.maxval)]
    lines += [" ".join(str(int(v)) for v in row) for row in px]
    return ("\n".join(lines) + "\n").encode("ascii")


def write_pgm(image: ImageGrid, path) -> None:
    data = pgm_bytes(image)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_pgm(path) -> ImageGrid:
    tokens = Path(path).read_text().split()
    if tokens[0] != "P2":
        raise ValueError("not an ASCII PGM file")
    w, h, maxval = (int(t) for t in tokens[1:4])
    px = np.array([int(t) for t in tokens[4:]], dtype=np.int64).reshape(h, w)
    return ImageGrid(px, maxval)


def _jsonable(obj):
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def report_json(report) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=False) + "\n"


def write_report(report, path) -> None:
    try:
        Path(path).write_text(report_json(report))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
