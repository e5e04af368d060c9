"""CSV persistence of sweeps, maps and (x, y) series.

Every file is UTF-8 with LF line endings.  It starts with ``# key=value``
metadata lines, then one column-header line, then data rows.  Numbers are
written with 17 significant digits so binary64 values survive a round trip
exactly.  See docs/formats.md for the byte-level description.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..errors import InputError, ParseError, StructuralError
from ..records import MapData, Sweep

SWEEP_FORMAT = "magcav-sweep/1"
MAP_FORMAT = "magcav-map/1"
SERIES_FORMAT = "magcav-series/1"

SWEEP_COLUMNS = ("freq_hz", "re_s21", "im_s21")
MAP_COLUMNS = ("current_ma", "freq_hz", "re_s21", "im_s21")
SCALING_COLUMNS = ("diameter_m", "g_hz")
TEMPERATURE_COLUMNS = ("temperature_k", "gamma_hz")

# metadata keys that map onto record fields rather than free-form labels
_FIELDS = {"current_ma": float, "temperature_k": float, "power_dbm": float, "seed": int}


def fmt(x) -> str:
    """17 significant digits, the shortest width that is exact for every double."""
    return format(float(x), ".17g")


def _header_lines(fmt_name, fields, labels):
    lines = [f"# format={fmt_name}"]
    for key, value in fields.items():
        if value is not None:
            lines.append(f"# {key}={value if key == 'seed' else fmt(value)}")
    for key, value in labels.items():
        if key in _FIELDS or key == "format":
            raise InputError(f"label {key!r} collides with a reserved metadata key")
        lines.append(f"# {key}={value}")
    return lines


def _write(path, lines):
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


class _Table:
    """Metadata and numeric rows of one file, with line numbers kept."""

    def __init__(self, path, expected_format, columns):
        self.path = str(path)
        self.meta = {}
        self.rows = []  # (line number, tuple of floats)
        raw = Path(path).read_bytes()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not valid UTF-8 ({exc.reason})", path=self.path) from None
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        body_start = None
        for number, line in enumerate(lines, 1):
            line = line.rstrip("\r")
            if line.startswith("#"):
                self._meta_line(line, number)
                continue
            if body_start is None:
                if tuple(c.strip() for c in line.split(",")) != columns:
                    raise ParseError(f"expected column header {','.join(columns)!r}, got {line!r}",
                                     number, self.path)
                body_start = number
                continue
            self.rows.append((number, self._row(line, number, len(columns))))
        if body_start is None:
            raise StructuralError(f"{self.path}: no column header; file is empty or has only comments")
        found = self.meta.pop("format", None)
        if found is not None and found != expected_format:
            raise ParseError(f"format is {found!r}, expected {expected_format!r}", 1, self.path)

    def _meta_line(self, line, number):
        body = line[1:].lstrip(" ")
        if "=" not in body:
            raise ParseError(f"metadata line lacks '=': {line!r}", number, self.path)
        key, value = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ParseError("metadata line has an empty key", number, self.path)
        if key in self.meta:
            raise ParseError(f"duplicate metadata key {key!r}", number, self.path)
        self.meta[key] = value

    def _row(self, line, number, arity):
        cells = line.split(",")
        if len(cells) != arity:
            raise ParseError(f"expected {arity} fields, got {len(cells)}", number, self.path)
        values = []
        for cell in cells:
            try:
                if "_" in cell:
                    raise ValueError(cell)
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric field {cell.strip()!r}", number, self.path) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite field {cell.strip()!r}", number, self.path)
            values.append(v)
        return tuple(values)

    def split_meta(self):
        """Record fields and remaining labels from the metadata."""
        fields = {}
        for key, kind in _FIELDS.items():
            if key in self.meta:
                text = self.meta.pop(key)
                try:
                    fields[key] = kind(text)
                except ValueError:
                    raise ParseError(f"metadata {key}={text!r} is not a valid {kind.__name__}",
                                     path=self.path) from None
        return fields, dict(self.meta)

    def check_increasing(self, column, rows=None, what="frequency"):
        rows = self.rows if rows is None else rows
        for (_, prev), (number, row) in zip(rows, rows[1:]):
            if not row[column] > prev[column]:
                raise ParseError(f"{what} {fmt(row[column])} does not increase", number, self.path)


def write_sweep(path, sweep: Sweep) -> None:
    lines = _header_lines(SWEEP_FORMAT, {"current_ma": sweep.current_ma,
                                         "temperature_k": sweep.temperature_k,
                                         "power_dbm": sweep.power_dbm,
                                         "seed": sweep.seed}, sweep.labels)
    lines.append(",".join(SWEEP_COLUMNS))
    lines += [f"{fmt(f)},{fmt(z.real)},{fmt(z.imag)}" for f, z in zip(sweep.freqs, sweep.s21)]
    _write(path, lines)


def read_sweep(path) -> Sweep:
    table = _Table(path, SWEEP_FORMAT, SWEEP_COLUMNS)
    if not table.rows:
        raise StructuralError(f"{table.path}: sweep has no data rows")
    table.check_increasing(0)
    fields, labels = table.split_meta()
    data = np.array([row for _, row in table.rows])
    return Sweep(data[:, 0], data[:, 1] + 1j * data[:, 2], labels=labels, **fields)


def write_map(path, m: MapData) -> None:
    lines = _header_lines(MAP_FORMAT, {"temperature_k": m.temperature_k,
                                       "power_dbm": m.power_dbm,
                                       "seed": m.seed}, m.labels)
    lines.append(",".join(MAP_COLUMNS))
    freq_text = [fmt(f) for f in m.freqs]
    for current, row in zip(m.currents, m.s21):
        c = fmt(current)
        lines += [f"{c},{f},{fmt(z.real)},{fmt(z.imag)}" for f, z in zip(freq_text, row)]
    _write(path, lines)


def read_map(path) -> MapData:
    table = _Table(path, MAP_FORMAT, MAP_COLUMNS)
    if not table.rows:
        raise StructuralError(f"{table.path}: map has no data rows")
    groups = []
    for number, row in table.rows:
        if groups and row[0] == groups[-1][0]:
            groups[-1][1].append((number, row))
        elif groups and not row[0] > groups[-1][0]:
            raise ParseError(f"current {fmt(row[0])} mA is out of order; rows must be grouped "
                             "by strictly increasing current", number, table.path)
        else:
            groups.append((row[0], [(number, row)]))
    for _, rows in groups:
        table.check_increasing(1, rows)
    freqs = [r[1] for _, r in groups[0][1]]
    for current, rows in groups[1:]:
        if [r[1] for _, r in rows] != freqs:
            raise StructuralError(
                f"{table.path}: ragged map; current {fmt(current)} mA has {len(rows)} frequencies "
                f"that differ from the {len(freqs)} of current {fmt(groups[0][0])} mA")
    if "current_ma" in table.meta:
        raise ParseError("map files carry current per row, not as metadata", path=table.path)
    fields, labels = table.split_meta()
    s21 = np.array([[r[2] + 1j * r[3] for _, r in rows] for _, rows in groups])
    return MapData(np.array([g[0] for g in groups]), np.array(freqs), s21, labels=labels, **fields)


def write_series(path, columns, points, meta=None) -> None:
    """Two-column numeric series, e.g. (diameter_m, g_hz)."""
    columns = tuple(columns)
    if len(columns) != 2:
        raise InputError("a series has exactly two columns")
    lines = [f"# format={SERIES_FORMAT}"]
    for key, value in (meta or {}).items():
        if key == "format" or any(c in key for c in "=\n\r#,"):
            raise InputError(f"invalid metadata key {key!r}")
        if "\n" in str(value) or "\r" in str(value):
            raise InputError(f"metadata {key!r} value contains a line break")
        lines.append(f"# {key}={value}")
    lines.append(",".join(columns))
    for x, y in points:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError("series values must be finite")
        lines.append(f"{fmt(x)},{fmt(y)}")
    _write(path, lines)


def read_series(path, columns):
    """Returns (points, meta) for a series file with the given column names."""
    table = _Table(path, SERIES_FORMAT, tuple(columns))
    if not table.rows:
        raise StructuralError(f"{table.path}: series has no data rows")
    return [row for _, row in table.rows], dict(table.meta)
