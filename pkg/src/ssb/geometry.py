"""Irregular domains as constructive solid geometry or raster masks.

Shapes answer point membership deterministically; points exactly on a
boundary count as inside. ``rasterize`` samples membership onto a grid to
produce the binary indicator field that the phase-field smoothing consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Field2, Grid2

__all__ = [
    "Shape",
    "Circle",
    "Annulus",
    "Rectangle",
    "Sector",
    "Polygon",
    "Union",
    "Intersection",
    "Difference",
    "RasterMask",
    "contains",
    "rasterize",
    "enlarged_domain",
    "load_mask",
    "boundary_points",
    "annulus_shape",
    "quarter_annulus_shape",
    "zhole_annulus",
    "SHAPE_PRESETS",
]

_TWO_PI = 2.0 * math.pi


class Shape:
    """Base class for CSG shapes. Instances are immutable values."""

    def contains(self, x: float, y: float) -> bool:
        raise NotImplementedError

    def mask(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Vectorized membership with the same semantics as :meth:`contains`."""
        raise NotImplementedError

    def bbox(self) -> tuple[float, float, float, float] | None:
        """(x_min, x_max, y_min, y_max); entries may be infinite. None if empty."""
        raise NotImplementedError

    def __and__(self, other: "Shape") -> "Intersection":
        return Intersection(self, other)

    def __or__(self, other: "Shape") -> "Union":
        return Union(self, other)

    def __sub__(self, other: "Shape") -> "Difference":
        return Difference(self, other)


@dataclass(frozen=True)
class Circle(Shape):
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"radius must be nonnegative, got {self.r}")

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.r**2

    def mask(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.r**2

    def bbox(self):
        return (self.cx - self.r, self.cx + self.r, self.cy - self.r, self.cy + self.r)


@dataclass(frozen=True)
class Annulus(Shape):
    cx: float
    cy: float
    r_in: float
    r_out: float

    def __post_init__(self):
        if not (self.r_out > self.r_in >= 0):
            raise ValueError(f"need r_out > r_in >= 0, got r_in={self.r_in}, r_out={self.r_out}")

    def contains(self, x, y):
        r2 = (x - self.cx) ** 2 + (y - self.cy) ** 2
        return self.r_in**2 <= r2 <= self.r_out**2

    def mask(self, x, y):
        r2 = (x - self.cx) ** 2 + (y - self.cy) ** 2
        return (r2 >= self.r_in**2) & (r2 <= self.r_out**2)

    def bbox(self):
        r = self.r_out
        return (self.cx - r, self.cx + r, self.cy - r, self.cy + r)


@dataclass(frozen=True)
class Rectangle(Shape):
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("rectangle must have positive extent")

    def contains(self, x, y):
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def mask(self, x, y):
        return (x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max)

    def bbox(self):
        return (self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass(frozen=True)
class Sector(Shape):
    """Infinite angular wedge theta_min <= theta <= theta_max about (cx, cy).

    Angles are in radians; a span of 2*pi or more covers the whole plane.
    Combine with an :class:`Annulus` to carve arcs out of rings.
    """

    cx: float
    cy: float
    theta_min: float
    theta_max: float

    def __post_init__(self):
        if not self.theta_min < self.theta_max:
            raise ValueError("need theta_min < theta_max")

    @property
    def span(self) -> float:
        return self.theta_max - self.theta_min

    def contains(self, x, y):
        if self.span >= _TWO_PI:
            return True
        theta = math.atan2(y - self.cy, x - self.cx)
        rel = (theta - self.theta_min) % _TWO_PI
        return rel <= self.span

    def mask(self, x, y):
        if self.span >= _TWO_PI:
            return np.ones(np.broadcast(x, y).shape, dtype=bool)
        theta = np.arctan2(y - self.cy, x - self.cx)
        rel = np.mod(theta - self.theta_min, _TWO_PI)
        return rel <= self.span

    def bbox(self):
        inf = math.inf
        return (-inf, inf, -inf, inf)


@dataclass(frozen=True)
class Polygon(Shape):
    """Simple polygon, membership by the even-odd rule; edges count as inside."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", tuple((float(a), float(b)) for a, b in self.vertices))

    def contains(self, x, y):
        verts = self.vertices
        n = len(verts)
        inside = False
        for i in range(n):
            x1, y1 = verts[i]
            x2, y2 = verts[(i + 1) % n]
            # exact on-edge test
            cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
            if cross == 0.0 and min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2):
                return True
            if (y1 > y) != (y2 > y):
                x_int = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < x_int:
                    inside = not inside
        return inside

    def mask(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        on_edge = np.zeros_like(inside)
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            x1, y1 = verts[i]
            x2, y2 = verts[(i + 1) % n]
            cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
            on_edge |= (
                (cross == 0.0)
                & (x >= min(x1, x2))
                & (x <= max(x1, x2))
                & (y >= min(y1, y2))
                & (y <= max(y1, y2))
            )
            crossing = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_int = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crossing & (x < x_int)
        return inside | on_edge

    def bbox(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), max(xs), min(ys), max(ys))


@dataclass(frozen=True)
class Union(Shape):
    a: Shape
    b: Shape

    def contains(self, x, y):
        return self.a.contains(x, y) or self.b.contains(x, y)

    def mask(self, x, y):
        return self.a.mask(x, y) | self.b.mask(x, y)

    def bbox(self):
        ba, bb = self.a.bbox(), self.b.bbox()
        if ba is None:
            return bb
        if bb is None:
            return ba
        return (min(ba[0], bb[0]), max(ba[1], bb[1]), min(ba[2], bb[2]), max(ba[3], bb[3]))


@dataclass(frozen=True)
class Intersection(Shape):
    a: Shape
    b: Shape

    def contains(self, x, y):
        return self.a.contains(x, y) and self.b.contains(x, y)

    def mask(self, x, y):
        return self.a.mask(x, y) & self.b.mask(x, y)

    def bbox(self):
        ba, bb = self.a.bbox(), self.b.bbox()
        if ba is None or bb is None:
            return None
        box = (max(ba[0], bb[0]), min(ba[1], bb[1]), max(ba[2], bb[2]), min(ba[3], bb[3]))
        if box[0] > box[1] or box[2] > box[3]:
            return None
        return box


@dataclass(frozen=True)
class Difference(Shape):
    """Points of ``a`` not in ``b`` (b's own boundary belongs to b, hence removed)."""

    a: Shape
    b: Shape

    def contains(self, x, y):
        return self.a.contains(x, y) and not self.b.contains(x, y)

    def mask(self, x, y):
        return self.a.mask(x, y) & ~self.b.mask(x, y)

    def bbox(self):
        return self.a.bbox()


def contains(shape: Shape, x: float, y: float) -> bool:
    """Exact set membership of a point under the CSG semantics."""
    return shape.contains(x, y)


# -- rasterization -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RasterMask:
    """Binary pixel mask with a physical placement.

    ``pixels[j, i]`` is 0 or 1; row index j increases with +y (images loaded
    from PGM files are flipped accordingly). ``origin`` is the physical
    location of the center of pixel (0, 0).
    """

    pixels: np.ndarray
    origin: tuple[float, float] = (0.0, 0.0)
    pixel_size: float = 1.0

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 2:
            raise ValueError("mask pixels must be a 2D array")
        if not np.isin(px, (0, 1)).all():
            raise ValueError("mask pixels must be strictly binary")
        if self.pixel_size <= 0:
            raise ValueError("pixel_size must be positive")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def extent(self) -> tuple[float, float, float, float]:
        """Physical rectangle covered by the pixel cells."""
        ox, oy = self.origin
        h = self.pixel_size
        return (ox - h / 2, ox + (self.width - 0.5) * h, oy - h / 2, oy + (self.height - 0.5) * h)


def _check_bbox_inside(shape: Shape, grid: Grid2) -> None:
    box = shape.bbox()
    if box is None:
        return
    ex = (grid.x0, grid.x0 + grid.lx, grid.y0, grid.y0 + grid.ly)
    inside = box[0] > ex[0] and box[1] < ex[1] and box[2] > ex[2] and box[3] < ex[3]
    if not inside:
        raise ValueError(
            f"shape bounding box {box} touches or exceeds the grid extent "
            f"[{ex[0]}, {ex[1]}] x [{ex[2]}, {ex[3]}]; periodic wrap would corrupt the boundary"
        )


def rasterize(shape_or_mask: Shape | RasterMask, grid: Grid2) -> Field2:
    """Sample the indicator of a shape or mask onto a grid (1 inside, 0 outside).

    Shapes with an actual boundary on the grid must fit strictly inside the
    grid extent; a shape that fills every grid point (or none) is allowed
    regardless, since a constant indicator has no boundary layer to corrupt.
    Masks are resampled to grid points by nearest neighbor.
    """
    if isinstance(shape_or_mask, Shape):
        chi = shape_or_mask.mask(grid.xg, grid.yg).astype(np.float64)
        if 0.0 < chi.mean() < 1.0:
            _check_bbox_inside(shape_or_mask, grid)
        return Field2(grid, chi)
    mask = shape_or_mask
    ox, oy = mask.origin
    ix = np.rint((grid.x - ox) / mask.pixel_size).astype(np.int64)
    iy = np.rint((grid.y - oy) / mask.pixel_size).astype(np.int64)
    valid_x = (ix >= 0) & (ix < mask.width)
    valid_y = (iy >= 0) & (iy < mask.height)
    chi = np.zeros(grid.shape)
    jj, ii = np.meshgrid(np.clip(iy, 0, mask.height - 1), np.clip(ix, 0, mask.width - 1), indexing="ij")
    chi[:, :] = mask.pixels[jj, ii]
    chi[~valid_y, :] = 0.0
    chi[:, ~valid_x] = 0.0
    return Field2(grid, chi)


def enlarged_domain(shape: Shape, xi: float, n: int) -> Grid2:
    """Square grid over the shape's bounding square inflated by 10*xi per side.

    The margin keeps the smoothed indicator effectively periodic: by the time
    the transition tail reaches the grid border it has decayed below roundoff.

    Sampling is cell-centered (grid points sit half a spacing inside the
    extent), so the point set inherits every mirror and quarter-turn symmetry
    of the shape about its center. That matters: symmetric sampling makes the
    discretization errors of the boundary layer cancel pairwise instead of
    accumulating as a slow drift of the solution mean.
    """
    if xi <= 0:
        raise ValueError(f"xi must be positive, got {xi}")
    box = shape.bbox()
    if box is None:
        raise ValueError("cannot build a domain around an empty shape")
    if not all(math.isfinite(v) for v in box):
        raise ValueError("shape has an unbounded bounding box; intersect with a bounded shape first")
    cx = 0.5 * (box[0] + box[1])
    cy = 0.5 * (box[2] + box[3])
    side = max(box[1] - box[0], box[3] - box[2]) + 20.0 * xi
    h = side / n
    return Grid2(nx=n, ny=n, lx=side, ly=side, x0=cx - side / 2 + h / 2, y0=cy - side / 2 + h / 2)


# -- PGM mask input ----------------------------------------------------------


def _read_pgm_tokens(data: bytes, count: int, pos: int) -> tuple[list[int], int]:
    """Read whitespace/comment-separated ASCII integers from a PGM header/body."""
    tokens: list[int] = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM file")
        try:
            tokens.append(int(data[start:pos]))
        except ValueError as exc:
            raise ValueError(f"malformed PGM token {data[start:pos]!r}") from exc
    return tokens, pos


def load_mask(path: str | Path, origin: tuple[float, float] = (0.0, 0.0), pixel_size: float = 1.0) -> RasterMask:
    """Load a grayscale PGM (P2 ASCII or P5 binary) as a binary mask.

    Pixels brighter than half of maxval map to 1. Image rows are flipped so
    that mask row 0 is the bottom of the image.
    """
    data = Path(path).read_bytes()
    if len(data) < 2 or data[:2] not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM file (expected P2 or P5 magic)")
    magic = data[:2]
    (width, height, maxval), pos = _read_pgm_tokens(data, 3, 2)
    if width <= 0 or height <= 0 or not (0 < maxval < 65536):
        raise ValueError(f"{path}: bad PGM dimensions {width}x{height}, maxval {maxval}")
    npix = width * height
    if magic == b"P2":
        values, _ = _read_pgm_tokens(data, npix, pos)
        img = np.array(values, dtype=np.int64)
    else:
        pos += 1  # single whitespace byte after maxval
        body = data[pos:]
        itemsize = 1 if maxval < 256 else 2
        if len(body) < npix * itemsize:
            raise ValueError(f"{path}: truncated PGM payload")
        raw = np.frombuffer(body, dtype=np.uint8 if itemsize == 1 else ">u2", count=npix)
        img = raw.astype(np.int64)
    if img.max(initial=0) > maxval:
        raise ValueError(f"{path}: pixel value exceeds maxval {maxval}")
    pixels = (img.reshape(height, width) > maxval / 2).astype(np.uint8)
    return RasterMask(pixels=pixels[::-1].copy(), origin=origin, pixel_size=pixel_size)


# -- boundary enumeration (for flux diagnostics) ------------------------------


def _leaf_curves(shape: Shape, sign: float, clip: float) -> list[tuple[float, object]]:
    """Collect (length, sampler) pairs for every primitive boundary curve.

    A sampler maps arclength fractions in [0, 1) to (points, normals); the
    normal points out of the composite taking Difference orientation into
    account via ``sign``.
    """
    if isinstance(shape, (Union, Intersection)):
        return _leaf_curves(shape.a, sign, clip) + _leaf_curves(shape.b, sign, clip)
    if isinstance(shape, Difference):
        return _leaf_curves(shape.a, sign, clip) + _leaf_curves(shape.b, -sign, clip)

    curves: list[tuple[float, object]] = []

    def circle(cx, cy, r, orient):
        def sample(s):
            ang = _TWO_PI * s
            nx, ny = np.cos(ang), np.sin(ang)
            pts = np.column_stack([cx + r * nx, cy + r * ny])
            return pts, orient * sign * np.column_stack([nx, ny])

        return (_TWO_PI * r, sample)

    def segment(p0, p1, normal):
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        nrm = sign * np.asarray(normal, dtype=float)

        def sample(s):
            pts = p0[None, :] + s[:, None] * (p1 - p0)[None, :]
            return pts, np.broadcast_to(nrm, pts.shape).copy()

        return (float(np.hypot(*(p1 - p0))), sample)

    if isinstance(shape, Circle):
        curves.append(circle(shape.cx, shape.cy, shape.r, +1.0))
    elif isinstance(shape, Annulus):
        curves.append(circle(shape.cx, shape.cy, shape.r_out, +1.0))
        if shape.r_in > 0:
            curves.append(circle(shape.cx, shape.cy, shape.r_in, -1.0))
    elif isinstance(shape, Rectangle):
        x0, x1, y0, y1 = shape.x_min, shape.x_max, shape.y_min, shape.y_max
        curves.append(segment((x0, y0), (x1, y0), (0.0, -1.0)))
        curves.append(segment((x1, y0), (x1, y1), (1.0, 0.0)))
        curves.append(segment((x1, y1), (x0, y1), (0.0, 1.0)))
        curves.append(segment((x0, y1), (x0, y0), (-1.0, 0.0)))
    elif isinstance(shape, Sector):
        if shape.span < _TWO_PI:
            c = np.array([shape.cx, shape.cy])
            for theta, normal in (
                (shape.theta_min, (math.sin(shape.theta_min), -math.cos(shape.theta_min))),
                (shape.theta_max, (-math.sin(shape.theta_max), math.cos(shape.theta_max))),
            ):
                tip = c + clip * np.array([math.cos(theta), math.sin(theta)])
                curves.append(segment(c, tip, normal))
    elif isinstance(shape, Polygon):
        verts = shape.vertices
        # outward normals assume CCW orientation; flip for CW
        area2 = sum(
            verts[i][0] * verts[(i + 1) % len(verts)][1] - verts[(i + 1) % len(verts)][0] * verts[i][1]
            for i in range(len(verts))
        )
        orient = 1.0 if area2 > 0 else -1.0
        for i in range(len(verts)):
            p0, p1 = np.array(verts[i]), np.array(verts[(i + 1) % len(verts)])
            edge = p1 - p0
            length = float(np.hypot(*edge))
            if length == 0:
                continue
            normal = orient * np.array([edge[1], -edge[0]]) / length
            curves.append(segment(p0, p1, normal))
    else:
        raise TypeError(f"unsupported shape type {type(shape).__name__}")
    return curves


def boundary_points(shape: Shape, samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample points on the boundary of a CSG shape with outward unit normals.

    Returns ``(points, normals)`` of shape (m, 2) with m <= samples; candidate
    points from primitive boundaries are kept only where the composite truly
    transitions from inside to outside (probed a small distance along the
    normal), which trims away primitive segments swallowed by the CSG ops.
    """
    box = shape.bbox()
    if box is None:
        raise ValueError("empty shape has no boundary")
    if not all(math.isfinite(v) for v in box):
        raise ValueError("cannot enumerate the boundary of an unbounded shape")
    diag = math.hypot(box[1] - box[0], box[3] - box[2])
    curves = _leaf_curves(shape, +1.0, clip=2.0 * diag)
    total = sum(length for length, _ in curves)
    if total == 0:
        raise ValueError("shape has no boundary curves")
    pts_all, nrm_all = [], []
    for length, sampler in curves:
        m = max(4, int(round(samples * length / total)))
        s = (np.arange(m) + 0.5) / m
        pts, nrm = sampler(s)
        pts_all.append(pts)
        nrm_all.append(nrm)
    pts = np.concatenate(pts_all)
    nrm = np.concatenate(nrm_all)
    delta = 1e-7 * diag
    inner = shape.mask(pts[:, 0] - delta * nrm[:, 0], pts[:, 1] - delta * nrm[:, 1])
    outer = shape.mask(pts[:, 0] + delta * nrm[:, 0], pts[:, 1] + delta * nrm[:, 1])
    keep = inner & ~outer
    if not keep.any():
        raise ValueError("no boundary points survived CSG filtering")
    return pts[keep], nrm[keep]


# -- named domain presets ------------------------------------------------------


def annulus_shape() -> Shape:
    """Ring 1 <= r <= 2 centered at the origin."""
    return Annulus(0.0, 0.0, 1.0, 2.0)


def quarter_annulus_shape() -> Shape:
    """Ring 1 <= r <= 2 restricted to the first quadrant (0 <= theta <= pi/2)."""
    return Intersection(Annulus(0.0, 0.0, 1.0, 2.0), Sector(0.0, 0.0, 0.0, math.pi / 2))


def zhole_annulus() -> Shape:
    """Annulus 1 <= r <= 5 with a z-shaped hole between radii 2 and 4.

    The hole is a union of three annular-sector pieces: an outer arc over
    15-30 degrees, an inner arc over 60-75 degrees, and the block over
    30-60 degrees joining them across the middle ring.
    """
    deg = math.pi / 180.0
    ring = Annulus(0.0, 0.0, 1.0, 5.0)
    outer_arc = Intersection(Annulus(0.0, 0.0, 3.0, 4.0), Sector(0.0, 0.0, 15 * deg, 30 * deg))
    inner_arc = Intersection(Annulus(0.0, 0.0, 2.0, 3.0), Sector(0.0, 0.0, 60 * deg, 75 * deg))
    joiner = Intersection(Annulus(0.0, 0.0, 2.0, 4.0), Sector(0.0, 0.0, 30 * deg, 60 * deg))
    return Difference(ring, Union(Union(outer_arc, joiner), inner_arc))


SHAPE_PRESETS = {
    "annulus": annulus_shape,
    "quarter_annulus": quarter_annulus_shape,
    "zhole_annulus": zhole_annulus,
}
