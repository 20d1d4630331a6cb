"""Glyph rasterization, perspective warping, and condition-set assembly.

The renderer consumes a glyph image (the transcript rasterized dark on
light) instead of a language prompt, plus a word-level mask, a
character-class segmentation mask, the masked block image, and a full
background reference. All of those are built here from known geometry,
so the character segmentation is exact rather than estimated.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2
import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import InvalidArgumentError, SingularGeometryError
from .geometry import BLOCK_CANVAS, Quad, RectWH

# Fixed public character-class table: 95 printable ASCII chars,
# label = 1-based index. Label 0 is background.
CHAR_CLASSES: str = "".join(chr(c) for c in range(32, 127))
CHAR_LABELS: dict[str, int] = {c: i + 1 for i, c in enumerate(CHAR_CLASSES)}

GLYPH_MARGIN = 2
_RASTER_BASE_SIZE = 128


@dataclass(frozen=True)
class GlyphImage:
    """Rasterized transcript: white canvas, dark ink, one box per character."""

    canvas: np.ndarray  # uint8 grayscale, H x W
    char_boxes: tuple[tuple[int, int, int, int], ...]  # (x0, y0, x1, y1)
    transcript: str

    @property
    def ink(self) -> np.ndarray:
        """Ink intensity, 0 = background, 255 = full ink."""
        return 255 - self.canvas

    def rect(self) -> RectWH:
        h, w = self.canvas.shape[:2]
        return RectWH(0.0, 0.0, float(w), float(h))


def default_font_path(monospace: bool = False) -> str:
    """Font discovery: GLYPHFORGE_FONT_DIR if set, else matplotlib's
    bundled DejaVu faces."""
    env_dir = os.environ.get("GLYPHFORGE_FONT_DIR")
    if env_dir:
        for name in sorted(os.listdir(env_dir)):
            if name.lower().endswith((".ttf", ".otf")):
                return os.path.join(env_dir, name)
    import matplotlib

    name = "DejaVuSansMono.ttf" if monospace else "DejaVuSans.ttf"
    return os.path.join(matplotlib.get_data_path(), "fonts", "ttf", name)


def rasterize_glyph(
    transcript: str,
    font: str | None = None,
    target_height: int = 32,
    margin: int = GLYPH_MARGIN,
) -> GlyphImage:
    """Rasterize a transcript horizontally with per-character boxes.

    The ink is scaled so its tight vertical extent equals target_height;
    the canvas adds `margin` px on every side.
    """
    if not transcript:
        raise InvalidArgumentError("transcript must be non-empty")
    for ch in transcript:
        if ch not in CHAR_LABELS:
            raise InvalidArgumentError(
                f"unsupported codepoint U+{ord(ch):04X} ({ch!r}); only printable ASCII"
            )
    if target_height < 1:
        raise InvalidArgumentError("target_height must be >= 1")
    font_path = font or default_font_path()
    ft = ImageFont.truetype(font_path, _RASTER_BASE_SIZE)

    pad = _RASTER_BASE_SIZE  # generous room for ascenders/descenders
    text_w = int(ft.getlength(transcript)) + 2 * pad
    text_h = 4 * _RASTER_BASE_SIZE
    img = Image.new("L", (text_w, text_h), 255)
    draw = ImageDraw.Draw(img)
    draw.text((pad, pad), transcript, font=ft, fill=0)
    arr = np.asarray(img)

    ink_rows = np.where((arr < 255).any(axis=1))[0]
    ink_cols = np.where((arr < 255).any(axis=0))[0]
    if len(ink_rows) == 0:
        # whitespace-only transcript: synthesize a blank line box
        y0, y1 = pad, pad + _RASTER_BASE_SIZE
        x0, x1 = pad, pad + max(1, int(ft.getlength(transcript)))
    else:
        y0, y1 = int(ink_rows[0]), int(ink_rows[-1]) + 1
        x0, x1 = int(ink_cols[0]), int(ink_cols[-1]) + 1

    # per-character ink boxes at base size, clipped to the advance cells so
    # neighbouring boxes never overlap
    cell_edges = [pad + ft.getlength(transcript[:i]) for i in range(len(transcript) + 1)]
    boxes_base = []
    for i, ch in enumerate(transcript):
        c0, c1 = cell_edges[i], max(cell_edges[i + 1], cell_edges[i] + 1.0)
        bb = ft.getbbox(ch)
        if bb is None or bb[2] <= bb[0] or bb[3] <= bb[1]:
            boxes_base.append((c0, float(y0), c1, float(y1)))
        else:
            boxes_base.append(
                (max(c0 + bb[0], c0), pad + bb[1], min(c0 + bb[2], c1), pad + bb[3])
            )

    scale = target_height / (y1 - y0)
    out_w = max(1, int(round((x1 - x0) * scale)))
    crop = arr[y0:y1, x0:x1]
    ink_scaled = cv2.resize(crop, (out_w, target_height), interpolation=cv2.INTER_AREA)

    canvas = np.full((target_height + 2 * margin, out_w + 2 * margin), 255, dtype=np.uint8)
    canvas[margin : margin + target_height, margin : margin + out_w] = ink_scaled

    ch_h, ch_w = canvas.shape
    edges_scaled = [int(round((e - x0) * scale + margin)) for e in cell_edges]
    boxes = []
    for i, (bx0, by0, bx1, by1) in enumerate(boxes_base):
        e0 = min(max(edges_scaled[i], 0), ch_w - 1)
        e1 = min(max(edges_scaled[i + 1], e0 + 1), ch_w)
        sx0 = (bx0 - x0) * scale + margin
        sx1 = (bx1 - x0) * scale + margin
        ix0 = min(max(int(np.floor(sx0)), e0), e1 - 1)
        ix1 = min(max(int(np.ceil(sx1)), ix0 + 1), e1)
        sy0 = (by0 - y0) * scale + margin
        sy1 = (by1 - y0) * scale + margin
        iy0 = min(max(int(np.floor(sy0)), 0), ch_h - 1)
        iy1 = min(max(int(np.ceil(sy1)), iy0 + 1), ch_h)
        boxes.append((ix0, iy0, ix1, iy1))
    return GlyphImage(canvas=canvas, char_boxes=tuple(boxes), transcript=transcript)


def quad_homography(src: RectWH, dst: Quad) -> np.ndarray:
    """3x3 projective matrix mapping the rect corners onto the quad
    vertices, solved directly from the 4 correspondences."""
    s = src.corners()
    d = dst.array
    A = np.zeros((8, 8))
    b = np.zeros(8)
    for i in range(4):
        x, y = s[i]
        u, v = d[i]
        A[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y]
        b[2 * i] = u
        b[2 * i + 1] = v
    try:
        h = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as e:
        raise SingularGeometryError(f"degenerate correspondences: {e}") from e
    H = np.append(h, 1.0).reshape(3, 3)
    if abs(np.linalg.det(H)) <= 1e-12:
        raise SingularGeometryError("homography is singular")
    return H


def apply_homography(H: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Apply a 3x3 projective map to an (N, 2) point array."""
    p = np.hstack([pts, np.ones((len(pts), 1))])
    q = p @ H.T
    return q[:, :2] / q[:, 2:3]


def warp_glyph(
    glyph: GlyphImage,
    H: np.ndarray,
    canvas_dims: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Warp glyph ink (bilinear) and its character-box label map
    (nearest-neighbor) onto a (width, height) canvas."""
    w, h = canvas_dims
    warped_ink = cv2.warpPerspective(
        glyph.ink, H, (w, h), flags=cv2.INTER_LINEAR, borderValue=0
    )
    labels = np.zeros(glyph.canvas.shape, dtype=np.uint8)
    for ch, (x0, y0, x1, y1) in zip(glyph.transcript, glyph.char_boxes):
        labels[y0:y1, x0:x1] = CHAR_LABELS[ch]
    warped_labels = cv2.warpPerspective(
        labels, H, (w, h), flags=cv2.INTER_NEAREST, borderValue=0
    )
    return warped_ink, warped_labels


@dataclass(frozen=True)
class ConditionSet:
    """Everything the text renderer conditions on, all at 512x512."""

    masked_block: np.ndarray  # uint8 color, quad region filled with MASK_FILL
    word_mask: np.ndarray  # uint8, 0 or 255
    char_seg_mask: np.ndarray  # uint8 labels, 0 = background
    glyph: GlyphImage
    background_ref: np.ndarray  # uint8 color, full background resized


MASK_FILL = (128, 128, 128)


def rasterize_quad_mask(quad: Quad, dims: tuple[int, int]) -> np.ndarray:
    """Filled-polygon binary mask (0/255) of a quad on a (width, height) canvas."""
    w, h = dims
    mask = np.zeros((h, w), dtype=np.uint8)
    pts = np.round(quad.array).astype(np.int32)
    cv2.fillPoly(mask, [pts], 255)
    return mask


def build_condition_set(
    block_image: np.ndarray,
    quad_in_block: Quad,
    glyph: GlyphImage,
    background_full: np.ndarray,
) -> ConditionSet:
    """Assemble the condition planes for one placement inside a 512 block."""
    if block_image.shape[:2] != (BLOCK_CANVAS, BLOCK_CANVAS):
        raise InvalidArgumentError("block image must be 512x512")
    arr = quad_in_block.array
    if arr.min() < -0.5 or arr.max() > BLOCK_CANVAS + 0.5:
        raise InvalidArgumentError("quad lies outside the block canvas")

    word_mask = rasterize_quad_mask(quad_in_block, (BLOCK_CANVAS, BLOCK_CANVAS))
    masked_block = block_image.copy()
    masked_block[word_mask > 0] = MASK_FILL

    H = quad_homography(glyph.rect(), quad_in_block)
    _, warped_labels = warp_glyph(glyph, H, (BLOCK_CANVAS, BLOCK_CANVAS))
    char_seg = np.where(word_mask > 0, warped_labels, 0).astype(np.uint8)

    bg = background_full
    if bg.shape[:2] != (BLOCK_CANVAS, BLOCK_CANVAS):
        bg = cv2.resize(bg, (BLOCK_CANVAS, BLOCK_CANVAS), interpolation=cv2.INTER_LINEAR)
    return ConditionSet(
        masked_block=masked_block,
        word_mask=word_mask,
        char_seg_mask=char_seg,
        glyph=glyph,
        background_ref=bg,
    )
