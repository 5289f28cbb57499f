"""Uniform periodic Cartesian grids and the scalar fields that live on them.

The solver embeds an irregular domain in an enlarged rectangle and works on a
uniform grid with periodic topology: the point at index ``nx`` is identified
with index 0, so there is no duplicated endpoint and ``dx = lx / nx``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = ["Grid2", "Field2", "make_grid", "wavenumbers", "eta"]


@dataclass(frozen=True)
class Grid2:
    """Uniform periodic grid on a rectangle.

    Attributes
    ----------
    nx, ny : int
        Points per axis. Both must be even and at least 8; even counts keep
        the real-transform Nyquist handling simple.
    lx, ly : float
        Physical side lengths of the rectangle.
    x0, y0 : float
        Physical coordinates of grid index (0, 0).
    """

    nx: int
    ny: int
    lx: float
    ly: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self) -> None:
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n < 8:
                raise ValueError(f"{name}={n}: need at least 8 points per axis")
            if n % 2 != 0:
                raise ValueError(f"{name}={n}: point counts must be even")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError(f"side lengths must be positive, got {self.lx} x {self.ly}")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape of a field on this grid: (ny, nx), y is the slow axis."""
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def has_square_cells(self, rtol: float = 1e-12) -> bool:
        return abs(self.dx - self.dy) <= rtol * max(self.dx, self.dy)

    @cached_property
    def x(self) -> np.ndarray:
        """x coordinates, shape (nx,)."""
        return self.x0 + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        """y coordinates, shape (ny,)."""
        return self.y0 + self.dy * np.arange(self.ny)

    @cached_property
    def xg(self) -> np.ndarray:
        """x coordinate mesh, shape (ny, nx)."""
        return np.broadcast_to(self.x[None, :], self.shape).copy()

    @cached_property
    def yg(self) -> np.ndarray:
        """y coordinate mesh, shape (ny, nx)."""
        return np.broadcast_to(self.y[:, None], self.shape).copy()

    def point(self, i: int, j: int) -> tuple[float, float]:
        """Physical coordinates of grid index (i, j) with i along x."""
        return (self.x0 + i * self.dx, self.y0 + j * self.dy)


def make_grid(nx: int, ny: int, lx: float, ly: float, x0: float = 0.0, y0: float = 0.0) -> Grid2:
    """Construct a validated periodic grid; see :class:`Grid2` for the contract."""
    return Grid2(nx=nx, ny=ny, lx=lx, ly=ly, x0=x0, y0=y0)


def wavenumbers(grid: Grid2, axis: str) -> np.ndarray:
    """Angular wavenumbers k_j = 2*pi*m(j)/L in FFT ordering for one axis.

    m(j) = j for j < n/2 and j - n for j >= n/2; the Nyquist index n/2 maps
    to -n/2. Equivalent to ``2*pi*np.fft.fftfreq(n, d=L/n)``.
    """
    if axis == "x":
        n, length = grid.nx, grid.lx
    elif axis == "y":
        n, length = grid.ny, grid.ly
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)


def eta(grid: Grid2, xi: float) -> float:
    """Interface resolution xi/dx, the number of cells across the smoothing width.

    Only meaningful on square-celled grids (dx == dy), which all simulation
    grids are required to be.
    """
    if xi <= 0:
        raise ValueError(f"xi must be positive, got {xi}")
    if not grid.has_square_cells():
        raise ValueError(f"eta requires square cells, got dx={grid.dx!r}, dy={grid.dy!r}")
    return xi / grid.dx


@dataclass(frozen=True, eq=False)
class Field2:
    """Real scalar field sampled on a :class:`Grid2`.

    ``data`` has shape (ny, nx): row-major with y as the slow axis, so
    ``data[j, i]`` sits at ``(x0 + i*dx, y0 + j*dy)``. Values must be finite.
    Treat instances as immutable; operations return new fields.
    """

    grid: Grid2
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != self.grid.shape:
            raise ValueError(f"data shape {data.shape} does not match grid shape {self.grid.shape}")
        if not np.isfinite(data).all():
            bad = np.argwhere(~np.isfinite(data))[0]
            raise ValueError(f"non-finite value at index (j={bad[0]}, i={bad[1]})")
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, grid: Grid2) -> "Field2":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: Grid2, value: float) -> "Field2":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid2, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "Field2":
        """Sample ``fn(x, y)`` (vectorized over coordinate meshes) onto the grid."""
        return cls(grid, np.asarray(fn(grid.xg, grid.yg), dtype=np.float64))

    def max_abs(self) -> float:
        return float(np.abs(self.data).max())
