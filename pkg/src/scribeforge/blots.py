"""Handwritten blot augmentation: semi-opaque Bezier scribbles over the text,
simulating crossed-out characters. Region choice, zigzag control-point
generation, and stroke drawing are all driven by one RngState, so a seed
fully determines the output.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bezier import ControlPolygon, Point2, rasterize_stroke, sample_curve
from .raster import RasterImage, Rect, round_half_away
from .rng import RngState

INK_BLACK = 0
# Pixels darker than this count as ink when locating text for blot placement.
INK_THRESHOLD = 250
# Chance that a generated control point is appended twice, pulling the curve
# into a wider loop around it.
DOUBLE_POINT_PROBA = 0.2
# Curve sampling is dense enough that adjacent samples sit < 1 px apart at
# blot scales.
MIN_CURVE_SAMPLES = 50
SAMPLES_PER_POINT = 10
# Region width is carved into one band per ~5 px, scaled by intensity.
BAND_WIDTH_PX = 5


@dataclass(frozen=True)
class BlotConfig:
    """Strikethrough parameters; defaults are the published values."""

    min_h: int = 50
    max_h: int = 100
    min_w: int = 10
    max_w: int = 50
    incline: int = 15
    intensity: float = 0.9
    transparency: float = 0.95  # stroke opacity: 0.95 is a nearly solid blot
    count_min: int = 1
    count_max: int = 11
    proba: float = 0.5
    thickness: float = 3.0

    def __post_init__(self):
        if self.min_h > self.max_h or self.min_w > self.max_w:
            raise ValueError("min size exceeds max size")
        if self.count_min < 1 or self.count_min > self.count_max:
            raise ValueError(f"bad stroke count range [{self.count_min}, {self.count_max}]")
        for name in ("intensity", "transparency", "proba"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} out of [0, 1]: {v}")
        if self.incline < 0 or self.thickness < 1:
            raise ValueError("incline must be >= 0 and thickness >= 1")


def ink_bounding_box(image: RasterImage) -> Optional[Rect]:
    """Tightest rect containing pixels darker than INK_THRESHOLD; None if blank."""
    ys, xs = np.nonzero(image.data < INK_THRESHOLD)
    if xs.size == 0:
        return None
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return Rect(x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def _clamp(value: int, lo: int, hi: int) -> int:
    return max(lo, min(hi, value))


def choose_regions(
    image: RasterImage,
    config: BlotConfig,
    rng: RngState,
    boundaries=None,
) -> list[Rect]:
    """Draw count ~ U{count_min..count_max} strike areas over the ink bounding box.

    Sizes are uniform within the configured (image-clamped) ranges. With a
    BoundarySet the x-center snaps to a uniformly chosen character span's
    center, keeping blots on actual characters. Rects are clamped in-bounds.
    """
    count = rng.randint(config.count_min, config.count_max)
    box = ink_bounding_box(image) or Rect(0, 0, image.width, image.height)
    w_lo = min(config.min_w, image.width)
    w_hi = min(config.max_w, image.width)
    h_lo = min(config.min_h, image.height)
    h_hi = min(config.max_h, image.height)

    spans = list(boundaries.spans) if boundaries is not None and boundaries.spans else None
    regions = []
    for _ in range(count):
        w = rng.randint(w_lo, w_hi)
        h = rng.randint(h_lo, h_hi)
        if spans:
            span = spans[rng.randint(0, len(spans) - 1)]
            cx = (span.start_px + span.end_px) // 2
        else:
            cx = rng.randint(box.x, box.x + box.w - 1)
        cy = rng.randint(box.y, box.y + box.h - 1)
        x = _clamp(cx - w // 2, 0, image.width - w)
        y = _clamp(cy - h // 2, 0, image.height - h)
        regions.append(Rect(x, y, w, h))
    return regions


def generate_control_points(region: Rect, config: BlotConfig, rng: RngState) -> ControlPolygon:
    """Zigzag scribble skeleton for one strike area.

    The region is carved into k = max(2, round(intensity * w / 5)) vertical
    bands; one point is drawn per band, x uniform within the band, y uniform
    in a +/- incline window around band centers that alternate between the
    top and bottom thirds of the region. A point is occasionally appended
    twice so the curve loops a little wider around it.
    """
    k = max(2, int(round_half_away(config.intensity * region.w / BAND_WIDTH_PX)))
    top_cy = region.y + region.h / 6.0
    bot_cy = region.y + 5.0 * region.h / 6.0
    y_min, y_max = float(region.y), float(region.y + region.h)

    points: list[Point2] = []
    for i in range(k):
        band_x0 = region.x + i * region.w / k
        band_x1 = region.x + (i + 1) * region.w / k
        cy = top_cy if i % 2 == 0 else bot_cy
        x = rng.uniform(band_x0, band_x1)
        lo = max(y_min, cy - config.incline)
        hi = min(y_max, cy + config.incline)
        y = rng.uniform(lo, hi)
        points.append(Point2(x, y))
        if rng.bernoulli(DOUBLE_POINT_PROBA):
            points.append(Point2(x, y))
    return ControlPolygon(tuple(points))


def apply_with_regions(
    image: RasterImage,
    config: BlotConfig,
    rng: RngState,
    boundaries=None,
) -> tuple[RasterImage, list[Rect]]:
    """Like apply_handwritten_blots but also returns the chosen strike areas."""
    if not rng.bernoulli(config.proba):
        return image, []
    regions = choose_regions(image, config, rng, boundaries)
    out = image
    for region in regions:
        polygon = generate_control_points(region, config, rng)
        samples = max(MIN_CURVE_SAMPLES, SAMPLES_PER_POINT * len(polygon.points))
        path = sample_curve(polygon, samples)
        out = rasterize_stroke(
            out, path, thickness=config.thickness, opacity=config.transparency, ink=INK_BLACK
        )
    return out, regions


def apply_handwritten_blots(
    image: RasterImage,
    config: BlotConfig,
    rng: RngState,
    boundaries=None,
) -> RasterImage:
    """With probability `proba` draw the configured strikethrough strokes;
    otherwise return the input unchanged. Non-stroke pixels are bit-identical
    to the input either way."""
    out, _ = apply_with_regions(image, config, rng, boundaries)
    return out
