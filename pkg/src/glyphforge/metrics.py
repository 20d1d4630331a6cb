"""Evaluation measures: recognition accuracy, 1-NED, and polygon-IoU
detection precision/recall/hmean."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .geometry import Quad


@dataclass(frozen=True)
class RecogPair:
    prediction: str
    ground_truth: str

    def __post_init__(self):
        if not self.ground_truth:
            raise InvalidArgumentError("ground_truth must be non-empty")


@dataclass(frozen=True)
class DetMatchResult:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    hmean: float


def levenshtein(a: str, b: str) -> int:
    """Edit distance over unicode scalar values, iterative two-row DP."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def one_minus_ned(pred: str, gt: str) -> float:
    """1 - edit_distance / max(len); 1.0 when both strings are empty."""
    denom = max(len(pred), len(gt))
    if denom == 0:
        return 1.0
    return 1.0 - levenshtein(pred, gt) / denom


def recognition_accuracy(pairs: list[RecogPair], case_sensitive: bool = True) -> float:
    """Fraction of exact prediction/ground-truth matches."""
    if not pairs:
        raise InvalidArgumentError("recognition_accuracy needs at least one pair")
    if case_sensitive:
        hits = sum(p.prediction == p.ground_truth for p in pairs)
    else:
        hits = sum(p.prediction.casefold() == p.ground_truth.casefold() for p in pairs)
    return hits / len(pairs)


def _cross2(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman: clip a convex polygon by each half-plane of a
    clockwise convex clip polygon (screen coords, y down)."""
    out = subject
    n = len(clip)
    for i in range(n):
        if len(out) == 0:
            break
        a, b = clip[i], clip[(i + 1) % n]
        edge = b - a
        # inside = non-negative cross for y-down clockwise clip order
        d = edge[0] * (out[:, 1] - a[1]) - edge[1] * (out[:, 0] - a[0])
        keep = d >= -1e-12
        res = []
        m = len(out)
        for j in range(m):
            k = (j + 1) % m
            if keep[j]:
                res.append(out[j])
            if keep[j] != keep[k]:
                p, q = out[j], out[k]
                denom = _cross2(edge, q - p)
                if abs(denom) > 1e-18:
                    t = _cross2(edge, a - p) / denom
                    res.append(p + t * (q - p))
        out = np.asarray(res, dtype=np.float64) if res else np.empty((0, 2))
    return out


def _poly_area(pts: np.ndarray) -> float:
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return abs(0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def polygon_iou(a: Quad, b: Quad) -> float:
    """Intersection-over-union of two convex quads via half-plane clipping."""
    pa, pb = a.array, b.array
    area_a, area_b = _poly_area(pa), _poly_area(pb)
    if area_a <= 0 or area_b <= 0:
        warnings.warn("degenerate quad in polygon_iou; returning 0.0")
        return 0.0
    inter = _poly_area(_clip_polygon(pa, pb))
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def detection_prf(
    preds: list[Quad],
    gts: list[Quad],
    iou_threshold: float = 0.5,
) -> DetMatchResult:
    """One-to-one greedy matching by descending IoU, ICDAR style.

    Ties break by (pred index, gt index). tp = matched pairs with
    IoU >= threshold, fp = leftover predictions, fn = leftover truths.
    """
    candidates = []
    for pi, p in enumerate(preds):
        for gi, g in enumerate(gts):
            iou = polygon_iou(p, g)
            if iou >= iou_threshold:
                candidates.append((-iou, pi, gi))
    candidates.sort()
    used_p: set[int] = set()
    used_g: set[int] = set()
    tp = 0
    for _, pi, gi in candidates:
        if pi in used_p or gi in used_g:
            continue
        used_p.add(pi)
        used_g.add(gi)
        tp += 1
    fp = len(preds) - tp
    fn = len(gts) - tp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    hmean = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return DetMatchResult(tp, fp, fn, precision, recall, hmean)
