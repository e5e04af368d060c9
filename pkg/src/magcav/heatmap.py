"""Plot-ready exports of a current x frequency map.

Two outputs: a gnuplot ``nonuniform matrix`` text file and an 8-bit binary
PGM (P5) raster.  Both show Re(S21), with current along x (left to right,
ascending) and frequency along y (top row is the highest frequency).
"""

from __future__ import annotations

import numpy as np

from .dataio.tables import fmt
from .errors import InputError
from .records import MapData


def value_range(m: MapData, lo=None, hi=None):
    """Display range for Re(S21); symmetric about zero unless given."""
    re = m.s21.real
    if lo is None and hi is None:
        top = float(np.max(np.abs(re)))
        return -top, top
    lo = float(np.min(re)) if lo is None else float(lo)
    hi = float(np.max(re)) if hi is None else float(hi)
    if not hi >= lo:
        raise InputError(f"display range must have hi >= lo, got [{lo}, {hi}]")
    return lo, hi


def intensities(m: MapData, lo: float, hi: float) -> np.ndarray:
    """Gray levels, shape (frequencies, currents), top row = highest frequency.

    level = round(255 (Re S21 - lo) / (hi - lo)) clipped to 0..255; a zero
    range maps everything to 128.
    """
    re = m.s21.real.T[::-1]
    if hi == lo:
        return np.full(re.shape, 128, dtype=np.uint8)
    scaled = np.rint(255.0 * (re - lo) / (hi - lo))
    return np.clip(scaled, 0, 255).astype(np.uint8)


def write_pgm(path, m: MapData, lo=None, hi=None) -> tuple:
    lo, hi = value_range(m, lo, hi)
    img = intensities(m, lo, hi)
    header = (
        "P5\n"
        f"# Re(S21) mapped linearly: gray 0 = {fmt(lo)}, gray 255 = {fmt(hi)}\n"
        f"# x: current {fmt(m.currents[0])} .. {fmt(m.currents[-1])} mA, ascending\n"
        f"# y: frequency {fmt(m.freqs[-1])} .. {fmt(m.freqs[0])} Hz, top to bottom\n"
        f"{img.shape[1]} {img.shape[0]}\n255\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(img.tobytes())
    return lo, hi


def write_matrix(path, m: MapData) -> None:
    """gnuplot: plot 'file' nonuniform matrix using 1:2:3 with image."""
    lines = ["# Re(S21); first row: column count then currents (mA);",
             "# following rows: frequency (Hz) then Re(S21) per current"]
    lines.append(" ".join([str(m.currents.size)] + [fmt(c) for c in m.currents]))
    for f, row in zip(m.freqs, m.s21.real.T):
        lines.append(" ".join([fmt(f)] + [fmt(v) for v in row]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def export_heatmap(m: MapData, matrix_path=None, pgm_path=None, lo=None, hi=None):
    """Write whichever outputs are requested; returns the display range used."""
    if matrix_path is not None:
        write_matrix(matrix_path, m)
    rng = value_range(m, lo, hi)
    if pgm_path is not None:
        write_pgm(pgm_path, m, *rng)
    return rng
