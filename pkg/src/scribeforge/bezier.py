"""Bernstein basis polynomials, Bezier curve evaluation, and stroke rasterization."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import RasterImage, blend_ink


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True)
class ControlPolygon:
    """Ordered control points v_0..v_n; the curve is their Bernstein-weighted blend."""

    points: tuple[Point2, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        if len(pts) < 2:
            raise ValueError("a control polygon needs at least 2 points")
        object.__setattr__(self, "points", pts)

    @property
    def degree(self) -> int:
        return len(self.points) - 1


def binomial(n: int, j: int) -> float:
    # Multiplicative form in floating point; stable for the degrees used here (n <= ~30).
    c = 1.0
    for i in range(j):
        c = c * (n - i) / (i + 1)
    return c


def bernstein(j: int, n: int, s: float) -> float:
    """Basis value C(n,j) * s^j * (1-s)^(n-j), with 0^0 taken as 1."""
    if j < 0 or j > n:
        raise ValueError(f"basis index {j} outside [0, {n}]")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"parameter out of [0, 1]: {s}")
    return binomial(n, j) * s**j * (1.0 - s) ** (n - j)


def bezier_point(polygon: ControlPolygon, s: float) -> Point2:
    """Curve point B(s) = sum_j bernstein(j, n, s) * v_j."""
    n = polygon.degree
    x = y = 0.0
    for j, p in enumerate(polygon.points):
        w = bernstein(j, n, s)
        x += w * p.x
        y += w * p.y
    return Point2(x, y)


def sample_curve(polygon: ControlPolygon, samples: int) -> list[Point2]:
    """Evaluate the curve at s = i/(samples-1) for i = 0..samples-1, in order."""
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    step = samples - 1
    return [bezier_point(polygon, i / step) for i in range(samples)]


def rasterize_stroke(
    image: RasterImage,
    path: list[Point2],
    thickness: float = 1.0,
    opacity: float = 1.0,
    ink: int = 0,
) -> RasterImage:
    """Composite the polyline onto the image as a round-capped stroke.

    A pixel is covered when its center lies within thickness/2 (Euclidean) of
    any segment; covered pixels are composited exactly once per stroke, so
    opacity is independent of sampling density. Pixels outside the image are
    skipped; a single-point path stamps one disc.
    """
    if not path:
        raise ValueError("empty stroke path")
    if not 0.0 <= opacity <= 1.0:
        raise ValueError(f"opacity out of [0, 1]: {opacity}")
    if thickness < 1.0:
        raise ValueError(f"thickness must be >= 1, got {thickness}")
    h, w = image.height, image.width
    radius = thickness / 2.0
    r2 = radius * radius

    pts = [(p.x, p.y) for p in path]
    segments = list(zip(pts, pts[1:])) if len(pts) > 1 else [(pts[0], pts[0])]

    covered = np.zeros((h, w), dtype=bool)
    for (x0, y0), (x1, y1) in segments:
        xmin = max(0, int(math.floor(min(x0, x1) - radius)))
        xmax = min(w - 1, int(math.ceil(max(x0, x1) + radius)))
        ymin = max(0, int(math.floor(min(y0, y1) - radius)))
        ymax = min(h - 1, int(math.ceil(max(y0, y1) + radius)))
        if xmin > xmax or ymin > ymax:
            continue
        xs = np.arange(xmin, xmax + 1, dtype=np.float64)
        ys = np.arange(ymin, ymax + 1, dtype=np.float64)
        gx, gy = np.meshgrid(xs, ys)
        dx, dy = x1 - x0, y1 - y0
        seg_len2 = dx * dx + dy * dy
        if seg_len2 == 0.0:
            d2 = (gx - x0) ** 2 + (gy - y0) ** 2
        else:
            t = np.clip(((gx - x0) * dx + (gy - y0) * dy) / seg_len2, 0.0, 1.0)
            d2 = (gx - (x0 + t * dx)) ** 2 + (gy - (y0 + t * dy)) ** 2
        covered[ymin : ymax + 1, xmin : xmax + 1] |= d2 <= r2

    if not covered.any():
        return image
    out = np.array(image.data)
    out[covered] = blend_ink(image.data[covered], opacity, ink)
    return RasterImage(out)
