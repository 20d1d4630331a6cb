"""Quadrilateral geometry and adaptive text-block computation.

A text region is annotated as a convex quadrilateral. Rendering happens
inside a square "text block" around the region whose side is chosen by a
power-of-two heuristic, cropped from the image and resized to a fixed
512x512 canvas. This module owns all the coordinate plumbing between
image space and block space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import InvalidArgumentError, InvalidGeometryError

BLOCK_CANVAS = 512
DEFAULT_MIN_SIDE = 64


def _shoelace(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class Quad:
    """Convex quadrilateral, vertices clockwise (screen coords, y down),
    starting from the vertex with minimal (y, x)."""

    points: tuple[tuple[float, float], ...]

    @classmethod
    def from_points(cls, pts) -> "Quad":
        arr = np.asarray(pts, dtype=np.float64).reshape(4, 2)
        if not np.isfinite(arr).all():
            raise InvalidGeometryError("quad has non-finite coordinates")
        area = _shoelace(arr)
        if abs(area) < 1e-9:
            raise InvalidGeometryError("quad has zero area")
        if area < 0:  # counter-clockwise on screen; reverse
            arr = arr[::-1]
        # clockwise order makes every consecutive edge cross non-negative
        d = np.roll(arr, -1, axis=0) - arr
        cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
        if np.any(cross < -1e-9):
            raise InvalidGeometryError("quad is not convex")
        start = int(np.lexsort((arr[:, 0], arr[:, 1]))[0])
        arr = np.roll(arr, -start, axis=0)
        return cls(tuple(map(tuple, arr.tolist())))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)

    @property
    def area(self) -> float:
        return abs(_shoelace(self.array))

    def round_int(self) -> list[int]:
        """Flat [x1,y1,...,x4,y4] with coordinates rounded to int."""
        return [int(round(v)) for v in self.array.ravel()]


@dataclass(frozen=True)
class RectWH:
    """Axis-aligned rectangle, top-left corner plus extents."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise InvalidGeometryError(f"rect extents must be positive, got {self.w}x{self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def corners(self) -> np.ndarray:
        """Clockwise from top-left."""
        return np.array(
            [
                [self.x, self.y],
                [self.x + self.w, self.y],
                [self.x + self.w, self.y + self.h],
                [self.x, self.y + self.h],
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class TextBlock:
    """Square crop descriptor around a text region."""

    center: tuple[float, float]
    side_raw: int
    side_effective: int
    crop_origin: tuple[int, int]
    scale: float  # block -> 512 canvas
    source_rect: RectWH


def min_enclosing_rect(quad: Quad) -> RectWH:
    """Axis-aligned bounding box of the quad's vertices."""
    arr = quad.array
    x0, y0 = arr.min(axis=0)
    x1, y1 = arr.max(axis=0)
    if x1 - x0 <= 0 or y1 - y0 <= 0:
        raise InvalidGeometryError("degenerate quad: zero-extent bounding box")
    return RectWH(float(x0), float(y0), float(x1 - x0), float(y1 - y0))


def block_side(w: int, h: int) -> int:
    """Side of the square block for a text region of w x h pixels.

    s = 2 ** (1 + floor(log2 m) + floor(log2 ceil(m / 64))) with m = max(w, h).
    Exact integer arithmetic; no clamping.
    """
    if w < 1 or h < 1:
        raise InvalidArgumentError(f"extents must be >= 1 pixel, got {w}x{h}")
    m = max(int(w), int(h))
    exp = 1 + (m.bit_length() - 1) + ((-(-m // 64)).bit_length() - 1)
    return 1 << exp


def make_block(
    quad: Quad,
    image_dims: tuple[int, int],
    s_min: int = DEFAULT_MIN_SIDE,
) -> TextBlock:
    """Compute the crop block for a quad inside an image of (width, height).

    The raw side from the power-of-two rule is clamped to [s_min,
    min(image dims)]; a block overflowing a border is shifted inward,
    never shrunk.
    """
    img_w, img_h = int(image_dims[0]), int(image_dims[1])
    rect = min_enclosing_rect(quad)
    side_raw = block_side(max(1, math.ceil(rect.w)), max(1, math.ceil(rect.h)))
    side = int(min(max(side_raw, s_min), min(img_w, img_h)))
    cx, cy = rect.center
    ox = int(round(cx - side / 2.0))
    oy = int(round(cy - side / 2.0))
    ox = min(max(ox, 0), img_w - side)
    oy = min(max(oy, 0), img_h - side)
    return TextBlock(
        center=(cx, cy),
        side_raw=side_raw,
        side_effective=side,
        crop_origin=(ox, oy),
        scale=BLOCK_CANVAS / side,
        source_rect=rect,
    )


def crop_resize(image: np.ndarray, block: TextBlock) -> np.ndarray:
    """Crop the block window and bilinearly resize it to 512x512."""
    ox, oy = block.crop_origin
    s = block.side_effective
    crop = image[oy : oy + s, ox : ox + s]
    if crop.shape[0] != s or crop.shape[1] != s:
        raise InvalidArgumentError("block crop window exceeds image bounds")
    if s == BLOCK_CANVAS:
        return crop.copy()
    return cv2.resize(crop, (BLOCK_CANVAS, BLOCK_CANVAS), interpolation=cv2.INTER_LINEAR)


def paste_back(original_image: np.ndarray, block: TextBlock, rendered_512: np.ndarray) -> np.ndarray:
    """Resize the rendered 512 canvas to the block side and write it into
    the crop window; all other pixels are untouched."""
    if rendered_512.shape[:2] != (BLOCK_CANVAS, BLOCK_CANVAS):
        raise InvalidArgumentError(
            f"rendered canvas must be {BLOCK_CANVAS}x{BLOCK_CANVAS}, got {rendered_512.shape[:2]}"
        )
    if rendered_512.ndim != original_image.ndim:
        raise InvalidArgumentError("rendered canvas channel layout differs from original image")
    s = block.side_effective
    if s == BLOCK_CANVAS:
        patch = rendered_512
    else:
        patch = cv2.resize(rendered_512, (s, s), interpolation=cv2.INTER_LINEAR)
    ox, oy = block.crop_origin
    out = original_image.copy()
    out[oy : oy + s, ox : ox + s] = patch
    return out


def remap_quad(block: TextBlock, quad: Quad, direction: str) -> Quad:
    """Map a quad between image coordinates and 512-canvas block coordinates.

    direction: "image_to_block" or "block_to_image".
    """
    ox, oy = block.crop_origin
    origin = np.array([ox, oy], dtype=np.float64)
    arr = quad.array
    if direction == "image_to_block":
        out = (arr - origin) * block.scale
    elif direction == "block_to_image":
        out = arr / block.scale + origin
    else:
        raise InvalidArgumentError(f"unknown direction {direction!r}")
    return Quad.from_points(out)
