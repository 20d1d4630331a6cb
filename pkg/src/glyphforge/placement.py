"""Semantic-aware placement: pick text positions from segmentation classes
that plausibly carry text, filtered by how planar the local depth is."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import cv2
import numpy as np
from scipy import ndimage

from .errors import DegeneratePlaneError, InvalidArgumentError
from .geometry import Quad
from .glyphs import rasterize_quad_mask

DEFAULT_ALLOWED_CLASSES = frozenset(
    {"wall", "sign", "billboard", "signboard", "building", "board", "door", "poster"}
)
PLANE_FIT_MAX_SAMPLES = 10_000
_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class SegmentationMap:
    labels: np.ndarray  # int H x W class ids
    class_table: dict[int, str]

    def __post_init__(self):
        present = set(np.unique(self.labels).tolist())
        missing = present - set(self.class_table)
        if missing:
            raise InvalidArgumentError(f"class ids missing from class table: {sorted(missing)}")


@dataclass(frozen=True)
class DepthMap:
    values: np.ndarray  # float H x W, relative depth

    def __post_init__(self):
        if not np.isfinite(self.values).all():
            raise InvalidArgumentError("depth map contains non-finite values")
        if (self.values < 0).any():
            raise InvalidArgumentError("depth map contains negative values")


@dataclass(frozen=True)
class RegionCandidate:
    mask: np.ndarray  # bool H x W, 4-connected
    class_name: str
    area: int
    plane: tuple[float, float, float] | None = None  # z = a*x + b*y + c
    rms_residual: float | None = None
    degenerate: bool = False


@dataclass(frozen=True)
class PlacementParams:
    text_height: int
    margin: int = 4
    max_tries: int = 100
    min_text_height: int = 8


def candidate_regions(
    seg: SegmentationMap,
    allowed_classes: frozenset[str] | set[str] = DEFAULT_ALLOWED_CLASSES,
    min_area: int = 400,
) -> list[RegionCandidate]:
    """4-connected components of allowed-class pixels, largest first;
    ties broken by the topmost-leftmost pixel."""
    known = set(seg.class_table.values())
    for name in allowed_classes - known:
        warnings.warn(f"allowed class {name!r} not present in class table")
    out = []
    for class_id, name in sorted(seg.class_table.items()):
        if name not in allowed_classes:
            continue
        labeled, n = ndimage.label(seg.labels == class_id, structure=_FOUR_CONNECTED)
        for comp in range(1, n + 1):
            mask = labeled == comp
            area = int(mask.sum())
            if area < min_area:
                continue
            out.append(RegionCandidate(mask=mask, class_name=name, area=area))

    def sort_key(r: RegionCandidate):
        first = np.argwhere(r.mask)[0]
        return (-r.area, int(first[0]), int(first[1]))

    return sorted(out, key=sort_key)


def fit_plane(depth: DepthMap, region: RegionCandidate) -> RegionCandidate:
    """Least-squares plane z = a*x + b*y + c over the region's depth samples.

    The fit subsamples to at most 10k points by a deterministic row-major
    stride; the residual is evaluated over every region pixel.
    """
    if depth.values.shape != region.mask.shape:
        raise InvalidArgumentError("depth and region dims differ")
    pts = np.argwhere(region.mask)
    if len(pts) < 3:
        raise DegeneratePlaneError("fewer than 3 samples in region")
    stride = max(1, math.ceil(len(pts) / PLANE_FIT_MAX_SAMPLES))
    sub = pts[::stride]
    x, y = sub[:, 1].astype(np.float64), sub[:, 0].astype(np.float64)
    z = depth.values[sub[:, 0], sub[:, 1]]
    A = np.column_stack([x, y, np.ones_like(x)])
    coeffs, _, rank, _ = np.linalg.lstsq(A, z, rcond=None)
    if rank < 3:
        return replace(region, degenerate=True)
    a, b, c = (float(v) for v in coeffs)
    all_x = pts[:, 1].astype(np.float64)
    all_y = pts[:, 0].astype(np.float64)
    all_z = depth.values[pts[:, 0], pts[:, 1]]
    resid = all_z - (a * all_x + b * all_y + c)
    rms = float(np.sqrt(np.mean(resid**2)))
    return replace(region, plane=(a, b, c), rms_residual=rms)


def planarity_threshold(depth: DepthMap, region: RegionCandidate, fraction: float = 0.05) -> float:
    """Default planarity gate: a fraction of the region's depth range."""
    z = depth.values[region.mask]
    return fraction * float(z.max() - z.min())


def _surface_horizontal_angle(plane: tuple[float, float, float]) -> float:
    """Image-plane angle of the fitted plane's level lines (constant depth),
    i.e. the in-surface horizontal the text baseline follows."""
    a, b, _ = plane
    if math.hypot(a, b) < 1e-9:
        return 0.0
    dx, dy = b, -a  # perpendicular to the in-image depth gradient
    if dx < 0 or (dx == 0 and dy < 0):
        dx, dy = -dx, -dy
    return math.atan2(dy, dx)


def sample_placement(
    region: RegionCandidate,
    text_aspect: float,
    rng: np.random.Generator,
    params: PlacementParams,
) -> Quad | None:
    """Sample a text rectangle inscribed in the eroded region mask, tilted
    along the fitted plane's in-surface horizontal. Returns None when no
    fit is found within max_tries."""
    if region.plane is None:
        raise InvalidArgumentError("region has no fitted plane")
    h_px = params.text_height
    if h_px < params.min_text_height:
        return None
    w_px = text_aspect * h_px
    img_h, img_w = region.mask.shape
    if w_px >= img_w or h_px >= img_h:
        return None

    k = 2 * params.margin + 1
    eroded = cv2.erode(region.mask.astype(np.uint8), np.ones((k, k), np.uint8))
    centers = np.argwhere(eroded > 0)
    if len(centers) == 0:
        return None

    theta = _surface_horizontal_angle(region.plane)
    c, s = math.cos(theta), math.sin(theta)
    half = np.array(
        [[-w_px / 2, -h_px / 2], [w_px / 2, -h_px / 2], [w_px / 2, h_px / 2], [-w_px / 2, h_px / 2]]
    )
    rot = half @ np.array([[c, s], [-s, c]])

    for _ in range(params.max_tries):
        cy, cx = centers[rng.integers(len(centers))]
        corners = rot + np.array([cx, cy], dtype=np.float64)
        if corners.min() < 0 or corners[:, 0].max() >= img_w or corners[:, 1].max() >= img_h:
            continue
        quad = Quad.from_points(corners)
        support = rasterize_quad_mask(quad, (img_w, img_h)) > 0
        if np.all(region.mask[support]):
            return quad
    return None
