"""Field snapshot files and lightweight renderings.

The binary snapshot format (magic ``SSBF1``) is an ASCII header of nine
newline-terminated fields

    SSBF1, nx, ny, lx, ly, x0, y0, t, component-name

followed by exactly nx*ny little-endian float64 values, row-major with y as
the slow axis. Float header fields are written with ``repr`` so they parse
back bit-exactly. PGM heatmaps use plain grayscale P5 so no image library is
needed anywhere in the toolchain.
"""

from __future__ import annotations

from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .grid import Field2, Grid2

__all__ = ["MAGIC", "write_snapshot", "read_snapshot", "write_pgm", "write_field_csv", "write_section_csv"]

MAGIC = "SSBF1"


def write_snapshot(path: str | Path, field: Field2, t: float, name: str) -> None:
    """Write one component field with its grid geometry and timestamp."""
    if "\n" in name or "\r" in name:
        raise ValueError("component name must not contain newlines")
    g = field.grid
    header = "\n".join(
        [MAGIC, str(g.nx), str(g.ny), repr(g.lx), repr(g.ly), repr(g.x0), repr(g.y0), repr(float(t)), name]
    )
    payload = np.ascontiguousarray(field.data, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(payload)


def _read_line(fh: IO[bytes], what: str) -> str:
    line = fh.readline()
    if not line.endswith(b"\n"):
        raise ValueError(f"truncated snapshot header while reading {what}")
    return line[:-1].decode("ascii")


def read_snapshot(path: str | Path) -> tuple[Field2, float, str]:
    """Read a snapshot back as (field, t, component name)."""
    with open(path, "rb") as fh:
        magic = _read_line(fh, "magic")
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        nx = int(_read_line(fh, "nx"))
        ny = int(_read_line(fh, "ny"))
        lx = float(_read_line(fh, "lx"))
        ly = float(_read_line(fh, "ly"))
        x0 = float(_read_line(fh, "x0"))
        y0 = float(_read_line(fh, "y0"))
        t = float(_read_line(fh, "t"))
        name = _read_line(fh, "component name")
        payload = fh.read(8 * nx * ny + 1)
    if len(payload) != 8 * nx * ny:
        raise ValueError(f"{path}: payload length {len(payload)} != 8*nx*ny = {8 * nx * ny}")
    data = np.frombuffer(payload, dtype="<f8").reshape(ny, nx)
    grid = Grid2(nx=nx, ny=ny, lx=lx, ly=ly, x0=x0, y0=y0)
    return Field2(grid, data.copy()), t, name


def write_pgm(path: str | Path, field: Field2, lo: float | None = None, hi: float | None = None) -> None:
    """Render a field to an 8-bit grayscale PGM heatmap (P5).

    Values are mapped linearly from [lo, hi] (defaulting to the field's own
    range) to 0..255; the actual range is recorded in a header comment. Image
    rows run top to bottom, so the +y edge of the grid is the top of the image.
    """
    data = field.data
    lo = float(data.min()) if lo is None else float(lo)
    hi = float(data.max()) if hi is None else float(hi)
    span = hi - lo
    if span <= 0:
        scaled = np.zeros_like(data)
    else:
        scaled = np.clip((data - lo) / span, 0.0, 1.0)
    img = np.rint(scaled[::-1] * 255).astype(np.uint8)
    ny, nx = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n# range {repr(lo)} {repr(hi)}\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def write_field_csv(path: str | Path, field: Field2) -> None:
    """Long-format dump (x, y, value), one grid point per row."""
    g = field.grid
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for j in range(g.ny):
            yj = g.y[j]
            row = field.data[j]
            for i in range(g.nx):
                fh.write(f"{g.x[i]!r},{yj!r},{row[i]!r}\n")


def write_section_csv(path: str | Path, x: np.ndarray, columns: dict[str, Sequence[float]]) -> None:
    """1D section dump: column x plus one named column per supplied array."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with open(path, "w") as fh:
        fh.write(",".join(["x"] + names) + "\n")
        for i in range(len(x)):
            fh.write(",".join([repr(float(x[i]))] + [repr(float(a[i])) for a in arrays]) + "\n")
