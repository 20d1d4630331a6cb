"""Text-block rendering: a classical built-in blender and an HTTP client
for a remote diffusion renderer, with retry and fallback."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import cv2
import numpy as np
import requests

from .errors import (
    InvalidArgumentError,
    MalformedResponseError,
    RemoteStatusError,
    RemoteTimeoutError,
)
from .geometry import BLOCK_CANVAS, Quad
from .glyphs import ConditionSet, quad_homography, warp_glyph
from .imio import from_b64_png, to_b64_png

LUMA = np.array([0.299, 0.587, 0.114])
CONTRAST_FLOOR = 60.0


@dataclass(frozen=True)
class RenderRequest:
    condition_set: ConditionSet
    target_quad: Quad  # block (512-canvas) coordinates
    transcript: str
    request_id: str
    deadline_ms: int = 10_000

    def __post_init__(self):
        if self.transcript != self.condition_set.glyph.transcript:
            raise InvalidArgumentError("transcript differs from glyph transcript")


@dataclass(frozen=True)
class RenderResult:
    rendered_block: np.ndarray  # uint8 512x512x3
    renderer_tag: str  # "built-in" | "remote"
    latency_ms: int


@dataclass(frozen=True)
class RenderStyle:
    palette: tuple[tuple[int, int, int], ...] = ()  # empty -> black/white rule
    feather_px: int = 1


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff_s: float = 0.1


def _luminance(color) -> float:
    return float(np.dot(LUMA, color))


def _pick_ink_color(bg_color: np.ndarray, style: RenderStyle) -> tuple[int, int, int]:
    """Legibility rule: black or white, or the palette entry nearest in
    luminance that still clears the contrast floor; ties go to darker ink."""
    bg_l = _luminance(bg_color)
    if style.palette:
        ok = [c for c in style.palette if abs(_luminance(c) - bg_l) >= CONTRAST_FLOOR]
        if ok:
            return min(ok, key=lambda c: (abs(_luminance(c) - bg_l), _luminance(c)))
    black, white = (0, 0, 0), (255, 255, 255)
    d_black, d_white = bg_l, 255.0 - bg_l
    if d_black >= CONTRAST_FLOOR and d_black >= d_white:
        return black
    if d_white >= CONTRAST_FLOOR and d_white > d_black:
        return white
    return black if d_black >= d_white else white


def render_builtin(
    req: RenderRequest,
    style: RenderStyle = RenderStyle(),
    base_block: np.ndarray | None = None,
) -> RenderResult:
    """Classical blend: alpha-composite the perspective-warped glyph ink
    with a contrast-chosen color. Pixels outside the word mask keep the
    base block's values.

    base_block is the unmasked block image when the caller has it; when
    absent the masked region is reconstructed by inpainting.
    """
    t0 = time.monotonic()
    cs = req.condition_set
    if base_block is not None:
        base = base_block.astype(np.float64)
    else:
        base = cv2.inpaint(cs.masked_block, (cs.word_mask > 0).astype(np.uint8), 3, cv2.INPAINT_TELEA).astype(np.float64)

    H = quad_homography(cs.glyph.rect(), req.target_quad)
    ink, _ = warp_glyph(cs.glyph, H, (BLOCK_CANVAS, BLOCK_CANVAS))

    inside = cs.word_mask > 0
    bg_color = base[inside].mean(axis=0) if inside.any() else base.reshape(-1, 3).mean(axis=0)
    color = np.array(_pick_ink_color(bg_color, style), dtype=np.float64)

    alpha = ink.astype(np.float64) / 255.0
    if style.feather_px > 0:
        k = 2 * style.feather_px + 1
        alpha = cv2.GaussianBlur(alpha, (k, k), 0)
    alpha = np.where(inside, alpha, 0.0)[..., None]

    out = np.clip(np.round(base * (1 - alpha) + color * alpha), 0, 255).astype(np.uint8)
    latency = int((time.monotonic() - t0) * 1000)
    return RenderResult(rendered_block=out, renderer_tag="built-in", latency_ms=latency)


def request_payload(req: RenderRequest) -> dict:
    """JSON wire form: images as base64 PNG strings."""
    cs = req.condition_set
    return {
        "request_id": req.request_id,
        "deadline_ms": req.deadline_ms,
        "transcript": req.transcript,
        "target_quad": [list(p) for p in req.target_quad.points],
        "masked_block": to_b64_png(cs.masked_block),
        "word_mask": to_b64_png(cs.word_mask),
        "char_seg_mask": to_b64_png(cs.char_seg_mask),
        "glyph": to_b64_png(cs.glyph.canvas),
        "background_ref": to_b64_png(cs.background_ref),
    }


def _decode_response(req: RenderRequest, body: dict) -> np.ndarray:
    if body.get("request_id") != req.request_id:
        raise MalformedResponseError("response does not echo request_id")
    try:
        rendered = from_b64_png(body["rendered_block"])
    except Exception as e:
        raise MalformedResponseError(f"undecodable rendered_block: {e}") from e
    if rendered.shape[:2] != (BLOCK_CANVAS, BLOCK_CANVAS) or rendered.ndim != 3:
        raise MalformedResponseError(f"rendered_block has wrong dims {rendered.shape}")
    return rendered


def render_remote(
    req: RenderRequest,
    endpoint: str,
    retry: RetryPolicy = RetryPolicy(),
    fallback: bool = True,
    style: RenderStyle = RenderStyle(),
    base_block: np.ndarray | None = None,
    session: requests.Session | None = None,
) -> RenderResult:
    """POST the request to {endpoint}/render. Transport failures are
    retried, then fall back to the built-in renderer when enabled.
    Server error statuses and malformed payloads are surfaced as-is."""
    t0 = time.monotonic()
    payload = request_payload(req)
    url = endpoint.rstrip("/") + "/render"
    post = (session or requests).post
    last_exc: Exception | None = None
    for attempt in range(retry.attempts):
        try:
            resp = post(url, json=payload, timeout=req.deadline_ms / 1000.0)
        except requests.Timeout as e:
            last_exc = RemoteTimeoutError(f"no response within {req.deadline_ms} ms: {e}")
        except requests.RequestException as e:
            last_exc = RemoteTimeoutError(f"transport failure: {e}")
        else:
            if resp.status_code != 200:
                raise RemoteStatusError(resp.status_code, resp.text[:500])
            try:
                body = resp.json()
            except ValueError as e:
                raise MalformedResponseError(f"non-JSON response: {e}") from e
            rendered = _decode_response(req, body)
            latency = int((time.monotonic() - t0) * 1000)
            return RenderResult(rendered_block=rendered, renderer_tag="remote", latency_ms=latency)
        if attempt + 1 < retry.attempts:
            time.sleep(retry.backoff_s * (2**attempt))
    assert last_exc is not None
    if fallback:
        return render_builtin(req, style=style, base_block=base_block)
    raise last_exc
