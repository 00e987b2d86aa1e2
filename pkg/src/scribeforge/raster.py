"""8-bit single-channel line images: blank canvases, ink compositing,
height-preserving resize, horizontal/vertical stacking, and PNG/PGM I/O.

Convention: 0 is full ink (black), 255 is background (white). Every
operation returns a new image; pixel buffers are frozen after construction,
so values are safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WHITE = 255
BLACK = 0

# Luminance weights for color-to-gray conversion on load.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114


def round_half_away(values):
    """Round half away from zero (0.5 -> 1, 1.5 -> 2); never rounds ties to even.

    Used everywhere a pixel value or pixel count is computed, so outputs are
    bit-exact across runs.
    """
    arr = np.asarray(values)
    return np.sign(arr) * np.floor(np.abs(arr) + 0.5)


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Immutable grayscale raster, row-major uint8, shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D pixel array, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"zero dimension: shape={arr.shape}")
        if arr.dtype != np.uint8:
            if np.any((arr < 0) | (arr > 255)):
                raise ValueError("pixel values outside [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def tobytes(self) -> bytes:
        return self.data.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def __hash__(self) -> int:
        return hash((self.data.shape, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"RasterImage({self.width}x{self.height})"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle; x+w / y+h must stay inside an image when bound to one."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"negative origin ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise ValueError(f"empty rect {self.w}x{self.h}")

    def bound_check(self, width: int, height: int) -> None:
        if self.x + self.w > width or self.y + self.h > height:
            raise ValueError(f"{self} exceeds {width}x{height} image")


def new_blank(width: int, height: int, fill: int = WHITE) -> RasterImage:
    """Uniform canvas of the given size; every pixel equals `fill`."""
    if width < 1 or height < 1:
        raise ValueError(f"zero dimension: {width}x{height}")
    if not 0 <= fill <= 255:
        raise ValueError(f"fill out of [0, 255]: {fill}")
    return RasterImage(np.full((height, width), fill, dtype=np.uint8))


def blend_ink(old, opacity: float, ink: int) -> np.ndarray:
    """Alpha blend toward `ink`: round((1-opacity)*old + opacity*ink), uint8 out."""
    mixed = (1.0 - opacity) * np.asarray(old, dtype=np.float64) + opacity * float(ink)
    return round_half_away(mixed).astype(np.uint8)


def composite_ink(image: RasterImage, x: int, y: int, opacity: float, ink: int) -> RasterImage:
    """Blend one pixel toward `ink` with the given opacity.

    Out-of-range coordinates are a contract violation, not silently clipped.
    """
    if not 0.0 <= opacity <= 1.0:
        raise ValueError(f"opacity out of [0, 1]: {opacity}")
    if not 0 <= ink <= 255:
        raise ValueError(f"ink out of [0, 255]: {ink}")
    if not (0 <= x < image.width and 0 <= y < image.height):
        raise ValueError(f"({x}, {y}) outside {image.width}x{image.height} image")
    out = np.array(image.data)
    out[y, x] = blend_ink(image.data[y, x], opacity, ink)
    return RasterImage(out)


def _resize(image: RasterImage, new_width: int, new_height: int) -> RasterImage:
    """Bilinear resample with center-aligned coordinates and edge clamping."""
    h, w = image.height, image.width
    if (new_width, new_height) == (w, h):
        return image
    src = image.data.astype(np.float64)

    xs = (np.arange(new_width) + 0.5) * (w / new_width) - 0.5
    ys = (np.arange(new_height) + 0.5) * (h / new_height) - 0.5
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)

    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0

    top = src[np.ix_(y0, x0)] * (1 - fx) + src[np.ix_(y0, x1)] * fx
    bot = src[np.ix_(y1, x0)] * (1 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return RasterImage(round_half_away(out).astype(np.uint8))


def resize_to_height(image: RasterImage, target_height: int) -> RasterImage:
    """Scale to the target height, preserving aspect ratio (width rounded, min 1)."""
    if target_height < 1:
        raise ValueError(f"target height must be >= 1, got {target_height}")
    if target_height == image.height:
        return image
    new_width = max(1, int(round_half_away(image.width * target_height / image.height)))
    return _resize(image, new_width, target_height)


def hstack(images: list[RasterImage], target_height: int, fill: int = WHITE) -> RasterImage:
    """Concatenate left to right after resizing every piece to the common height.

    No blending at seams; `fill` is accepted for interface symmetry with
    vstack (resizing makes padding unnecessary).
    """
    if not images:
        raise ValueError("hstack of an empty list")
    resized = [resize_to_height(img, target_height) for img in images]
    if len(resized) == 1:
        return resized[0]
    return RasterImage(np.concatenate([img.data for img in resized], axis=1))


def vstack(images: list[RasterImage], gap: int = 0, fill: int = WHITE) -> RasterImage:
    """Stack lines top to bottom, right-padding narrow lines with `fill`,
    with `gap` rows of `fill` between consecutive lines."""
    if not images:
        raise ValueError("vstack of an empty list")
    if gap < 0:
        raise ValueError(f"gap must be >= 0, got {gap}")
    if not 0 <= fill <= 255:
        raise ValueError(f"fill out of [0, 255]: {fill}")
    max_w = max(img.width for img in images)
    rows = []
    for i, img in enumerate(images):
        if i > 0 and gap > 0:
            rows.append(np.full((gap, max_w), fill, dtype=np.uint8))
        if img.width < max_w:
            pad = np.full((img.height, max_w - img.width), fill, dtype=np.uint8)
            rows.append(np.concatenate([img.data, pad], axis=1))
        else:
            rows.append(img.data)
    if len(rows) == 1:
        return images[0]
    return RasterImage(np.concatenate(rows, axis=0))


# ---------------------------------------------------------------------------
# File I/O: PNG via Pillow, PGM (P5, maxval 255) as a dependency-free fallback.


def _luminance_from_rgba(rgba: np.ndarray) -> np.ndarray:
    """White-composite the alpha channel, then apply the luminance weights."""
    rgba = rgba.astype(np.float64)
    alpha = rgba[..., 3:4] / 255.0
    rgb = rgba[..., :3] * alpha + 255.0 * (1.0 - alpha)
    lum = _LUMA_R * rgb[..., 0] + _LUMA_G * rgb[..., 1] + _LUMA_B * rgb[..., 2]
    return round_half_away(lum).astype(np.uint8)


def save_png(image: RasterImage, path) -> None:
    from PIL import Image

    Image.fromarray(np.array(image.data), mode="L").save(path, format="PNG")


def load_png(path) -> RasterImage:
    from PIL import Image

    with Image.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.uint8)
        else:
            arr = _luminance_from_rgba(np.asarray(img.convert("RGBA")))
    return RasterImage(arr)


def save_pgm(image: RasterImage, path) -> None:
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(image.tobytes())


def load_pgm(path) -> RasterImage:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # Header: magic, width, height, maxval tokens; '#' comments allowed.
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError(f"{path}: unsupported PGM maxval {maxval}")
    raster = blob[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValueError(f"{path}: truncated PGM raster")
    return RasterImage(np.frombuffer(raster, dtype=np.uint8).reshape(height, width))


def save_image(image: RasterImage, path) -> None:
    """Write PNG or PGM depending on the file extension."""
    if str(path).lower().endswith(".pgm"):
        save_pgm(image, path)
    else:
        save_png(image, path)


def load_image(path) -> RasterImage:
    """Read PNG or PGM, sniffing the magic bytes."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        return load_pgm(path)
    return load_png(path)


def image_size(path) -> tuple[int, int]:
    """(width, height) without decoding the full raster."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        img = load_pgm(path)
        return img.width, img.height
    from PIL import Image

    with Image.open(path) as img:
        return img.size
