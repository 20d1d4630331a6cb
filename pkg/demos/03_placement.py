"""Semantic placement.

Text should land on surfaces where text plausibly appears: walls, signs,
boards. Given a semantic segmentation and a depth map, we extract connected
regions of those classes, keep the ones that are roughly planar in depth,
and sample a rotated rectangle inside — tilted to follow the surface's
depth level lines. This demo runs that chain on a synthetic scene.
"""

import cv2
import numpy as np

from glyphforge.placement import (
    DepthMap,
    PlacementParams,
    SegmentationMap,
    candidate_regions,
    fit_plane,
    planarity_threshold,
    sample_placement,
)
from glyphforge.imio import save_image

from _shared import out_dir, smooth_image

out = out_dir("03_placement")
h, w = 480, 640

# scene: a wall plus a bumpy "tree" area that should be filtered out
labels = np.zeros((h, w), dtype=np.int64)
labels[60:420, 40:400] = 1  # wall
labels[60:420, 420:620] = 2  # tree
table = {0: "sky", 1: "wall", 2: "tree"}
seg = SegmentationMap(labels=labels, class_table=table)

y, x = np.mgrid[0:h, 0:w].astype(np.float64)
depth_vals = 3.0 + 0.004 * x + 0.004 * y  # tilted plane
rng = np.random.default_rng(0)
depth_vals[labels == 2] += rng.uniform(0, 2.0, size=(labels == 2).sum())  # leaves
depth = DepthMap(values=depth_vals)

regions = candidate_regions(seg, {"wall", "tree"}, min_area=400)
print(f"{len(regions)} candidate regions:")
kept = []
for region in regions:
    fitted = fit_plane(depth, region)
    tau = planarity_threshold(depth, fitted)
    verdict = "planar" if fitted.rms_residual <= tau else "too bumpy"
    print(
        f"  {region.class_name:5s} area {region.area:6d}  rms residual "
        f"{fitted.rms_residual:.4f} vs tau {tau:.4f} -> {verdict}"
    )
    if fitted.rms_residual <= tau:
        kept.append(fitted)

canvas = smooth_image(w, h, seed=2)
canvas[labels == 2] = (canvas[labels == 2] * 0.5).astype(np.uint8)

print("\nsampling 6 placements on the planar region (aspect 5:1, height 28):")
rng = np.random.default_rng(7)
for i in range(6):
    quad = sample_placement(kept[0], 5.0, rng, PlacementParams(text_height=28))
    pts = np.round(quad.array).astype(np.int32)
    top = pts[1] - pts[0]
    angle = np.degrees(np.arctan2(top[1], top[0]))
    print(f"  placement {i}: top-left ({pts[0][0]}, {pts[0][1]}), tilt {angle:+.1f} deg")
    cv2.polylines(canvas, [pts], isClosed=True, color=(255, 0, 0), thickness=2)

save_image(out / "placements.png", canvas)
print(f"wrote {out}/placements.png (rectangles follow the 45-deg depth gradient)")
