"""Stage 1: create text-free backgrounds by orchestrating expert services
(text-to-image, OCR, inpainting, quality scoring) in a
synthesize -> erase -> evaluate loop."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import cv2
import numpy as np
import requests

from .errors import ClientError, ConfigurationError
from .geometry import Quad
from .imio import from_b64_png, save_image, to_b64_png

# OCR detections are (quad, transcript, confidence)
Detection = tuple[Quad, str, float]


@dataclass(frozen=True)
class ExpertClients:
    """Pluggable expert callables. Each is optional; operations check the
    ones they need up front."""

    text2image: Callable[[str], np.ndarray] | None = None
    ocr: Callable[[np.ndarray], list[Detection]] | None = None
    inpaint: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    quality: Callable[[np.ndarray], float] | None = None

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ConfigurationError(f"required expert client {name!r} is not configured")


class HttpExpertClient:
    """All experts behind one base endpoint speaking JSON + base64 PNG,
    on routes /t2i, /ocr, /inpaint, /quality."""

    def __init__(self, endpoint: str, timeout_s: float = 30.0, session=None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s
        self.session = session or requests.Session()

    def _post(self, route: str, payload: dict) -> dict:
        try:
            resp = self.session.post(
                f"{self.endpoint}{route}", json=payload, timeout=self.timeout_s
            )
        except requests.RequestException as e:
            raise ClientError(f"{route} transport failure: {e}") from e
        if resp.status_code != 200:
            raise ClientError(f"{route} returned {resp.status_code}: {resp.text[:200]}")
        return resp.json()

    def text2image(self, prompt: str) -> np.ndarray:
        return from_b64_png(self._post("/t2i", {"prompt": prompt})["image"])

    def ocr(self, image: np.ndarray) -> list[Detection]:
        body = self._post("/ocr", {"image": to_b64_png(image)})
        return [
            (Quad.from_points(d["quad"]), d["transcript"], float(d["confidence"]))
            for d in body["detections"]
        ]

    def inpaint(self, image: np.ndarray, mask: np.ndarray) -> np.ndarray:
        body = self._post("/inpaint", {"image": to_b64_png(image), "mask": to_b64_png(mask)})
        return from_b64_png(body["image"])

    def quality(self, image: np.ndarray) -> float:
        return float(self._post("/quality", {"image": to_b64_png(image)})["score"])

    def as_clients(self) -> ExpertClients:
        return ExpertClients(
            text2image=self.text2image, ocr=self.ocr, inpaint=self.inpaint, quality=self.quality
        )


@dataclass
class BackgroundRecord:
    image: np.ndarray | None
    provenance: str
    erase_iterations: int = 0
    quality_score: float = 0.0
    residual_text_count: int = 0
    verdict: str = "pending"  # accepted | rejected | pending
    reject_reason: str | None = None

    def to_json(self, image_path: str | None = None) -> dict:
        return {
            "image": image_path,
            "provenance": self.provenance,
            "erase_iterations": self.erase_iterations,
            "quality_score": round(self.quality_score, 6),
            "residual_text_count": self.residual_text_count,
            "verdict": self.verdict,
            "reject_reason": self.reject_reason,
        }


@dataclass(frozen=True)
class BackgroundThresholds:
    quality: float = 0.2
    tau_ocr: float = 0.5
    dilate_margin: int = 3
    max_iters: int = 3


def builtin_quality_proxy(image: np.ndarray) -> float:
    """No-reference quality stand-in: Laplacian-variance sharpness damped
    by an exposure-range factor, mapped to [0, 1]."""
    gray = image if image.ndim == 2 else cv2.cvtColor(image, cv2.COLOR_RGB2GRAY)
    gray = gray.astype(np.float64)
    lap_var = float(cv2.Laplacian(gray, cv2.CV_64F).var())
    sharpness = lap_var / (lap_var + 100.0)
    p2, p98 = np.percentile(gray, [2, 98])
    exposure = min(max((p98 - p2) / 128.0, 0.0), 1.0)
    return sharpness * exposure


def synthesize_backgrounds(prompts: list[str], clients: ExpertClients) -> list[BackgroundRecord]:
    """One image per prompt. Per-prompt client failures become rejected
    records; the batch never aborts."""
    clients.require("text2image")
    records = []
    for prompt in prompts:
        try:
            image = clients.text2image(prompt)
            records.append(BackgroundRecord(image=image, provenance=prompt))
        except Exception as e:
            records.append(
                BackgroundRecord(
                    image=None,
                    provenance=prompt,
                    verdict="rejected",
                    reject_reason=f"synthesis-failed: {e}",
                )
            )
    return records


def detections_mask(
    detections: list[Detection], dims: tuple[int, int], dilate_margin: int
) -> np.ndarray:
    """Union of detected quads, each dilated by the margin, as 0/255 mask."""
    w, h = dims
    mask = np.zeros((h, w), dtype=np.uint8)
    for quad, _, _ in detections:
        cv2.fillPoly(mask, [np.round(quad.array).astype(np.int32)], 255)
    if dilate_margin > 0:
        k = 2 * dilate_margin + 1
        mask = cv2.dilate(mask, np.ones((k, k), np.uint8))
    return mask


def erase_text(
    image: np.ndarray,
    clients: ExpertClients,
    max_iters: int = 3,
    tau_ocr: float = 0.5,
    dilate_margin: int = 3,
) -> tuple[np.ndarray, int]:
    """Detect-and-inpaint loop; stops when OCR finds nothing confident or
    after max_iters."""
    clients.require("ocr", "inpaint")
    current = image
    for iteration in range(max_iters):
        try:
            detections = [d for d in clients.ocr(current) if d[2] >= tau_ocr]
        except Exception as e:
            raise ClientError(f"ocr failed: {e}", iterations_completed=iteration) from e
        if not detections:
            return current, iteration
        mask = detections_mask(detections, (current.shape[1], current.shape[0]), dilate_margin)
        try:
            current = clients.inpaint(current, mask)
        except Exception as e:
            raise ClientError(f"inpaint failed: {e}", iterations_completed=iteration) from e
    return current, max_iters


def evaluate_background(
    image: np.ndarray,
    clients: ExpertClients,
    thresholds: BackgroundThresholds = BackgroundThresholds(),
) -> BackgroundRecord:
    """Score quality (client or built-in proxy) and count residual text.
    Accepted means zero residuals and score above threshold."""
    clients.require("ocr")
    score = clients.quality(image) if clients.quality else builtin_quality_proxy(image)
    residual = len([d for d in clients.ocr(image) if d[2] >= thresholds.tau_ocr])
    record = BackgroundRecord(
        image=image, provenance="", quality_score=score, residual_text_count=residual
    )
    if residual > 0:
        record.verdict = "rejected"
        record.reject_reason = "text-residue"
    elif score < thresholds.quality:
        record.verdict = "rejected"
        record.reject_reason = "low-quality"
    else:
        record.verdict = "accepted"
    return record


def _process_item(
    prompt: str, clients: ExpertClients, thresholds: BackgroundThresholds
) -> BackgroundRecord:
    try:
        image = clients.text2image(prompt)
    except Exception as e:
        return BackgroundRecord(
            image=None, provenance=prompt, verdict="rejected", reject_reason=f"synthesis-failed: {e}"
        )
    try:
        erased, iters = erase_text(
            image,
            clients,
            max_iters=thresholds.max_iters,
            tau_ocr=thresholds.tau_ocr,
            dilate_margin=thresholds.dilate_margin,
        )
    except ClientError as e:
        return BackgroundRecord(
            image=None,
            provenance=prompt,
            erase_iterations=e.iterations_completed,
            verdict="rejected",
            reject_reason=f"erase-failed: {e}",
        )
    record = evaluate_background(erased, clients, thresholds)
    record.provenance = prompt
    record.erase_iterations = iters
    return record


def run_background_pipeline(
    prompts: list[str],
    clients: ExpertClients,
    out_dir: str | Path,
    thresholds: BackgroundThresholds = BackgroundThresholds(),
    jobs: int = 4,
) -> list[BackgroundRecord]:
    """Full stage-1 batch: synthesize, erase, evaluate, and write PNGs plus
    a JSONL record file. Items are fault-isolated; output order follows
    prompt order regardless of worker scheduling."""
    clients.require("text2image", "ocr", "inpaint")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if prompts:
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            records = list(pool.map(lambda p: _process_item(p, clients, thresholds), prompts))
    else:
        records = []
    lines = []
    for i, record in enumerate(records):
        image_path = None
        if record.verdict == "accepted" and record.image is not None:
            image_path = f"bg_{i:05d}.png"
            save_image(out_dir / image_path, record.image)
        lines.append(json.dumps(record.to_json(image_path), sort_keys=True))
    (out_dir / "backgrounds.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return records


def read_prompts(path: str | Path) -> list[str]:
    """UTF-8 prompt file, one per line, '#' comments and blanks skipped."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out
