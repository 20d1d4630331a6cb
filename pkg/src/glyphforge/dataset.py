"""Dataset synthesis and emission: drive placement, conditioning, and
rendering over a pool of text-free backgrounds, then write images,
ICDAR-style annotations, and a reproducible manifest."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .config import PipelineConfig
from .errors import GlyphforgeError, InvalidArgumentError
from .geometry import Quad, crop_resize, make_block, paste_back, remap_quad
from .glyphs import build_condition_set, default_font_path, rasterize_glyph
from .imio import load_depth, load_image, load_segmentation, save_image
from .placement import (
    DepthMap,
    PlacementParams,
    SegmentationMap,
    candidate_regions,
    fit_plane,
    planarity_threshold,
    sample_placement,
)
from .render import (
    RenderRequest,
    RenderResult,
    RenderStyle,
    RetryPolicy,
    render_builtin,
    render_remote,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Lexicon:
    words: tuple[str, ...]
    source_digest: str

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        raw = Path(path).read_bytes()
        seen: dict[str, None] = {}
        for line in raw.decode("utf-8").splitlines():
            word = line.strip()
            if word:
                seen.setdefault(word, None)
        if not seen:
            raise InvalidArgumentError(f"lexicon {path} has no usable entries")
        return cls(words=tuple(seen), source_digest=hashlib.sha256(raw).hexdigest())


@dataclass(frozen=True)
class Instance:
    quad: Quad  # image coordinates
    transcript: str
    renderer_tag: str


@dataclass(frozen=True)
class AnnotationRecord:
    image_id: str
    instances: tuple[Instance, ...]


def icdar_line(quad: Quad, transcript: str) -> str:
    coords = ",".join(str(v) for v in quad.round_int())
    return f"{coords},{transcript}"


def write_icdar_annotations(records: list[AnnotationRecord], gt_dir: str | Path) -> list[Path]:
    """One gt_<image_id>.txt per record; transcript is the unescaped last
    field, ICDAR style."""
    gt_dir = Path(gt_dir)
    gt_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for record in records:
        path = gt_dir / f"gt_{record.image_id}.txt"
        lines = [icdar_line(inst.quad, inst.transcript) for inst in record.instances]
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        paths.append(path)
    return paths


def parse_icdar_file(path: str | Path) -> list[tuple[Quad, str]]:
    out = []
    for line in Path(path).read_text(encoding="utf-8-sig").splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split(",", 8)
        if len(parts) < 8:
            raise InvalidArgumentError(f"{path}: malformed ICDAR line {line!r}")
        coords = [float(v) for v in parts[:8]]
        transcript = parts[8] if len(parts) > 8 else ""
        quad = Quad.from_points(np.array(coords).reshape(4, 2))
        out.append((quad, transcript))
    return out


# ---------------------------------------------------------------------------
# synthesis


@dataclass(frozen=True)
class BackgroundEntry:
    stem: str
    image_path: Path
    seg_path: Path
    depth_path: Path


def discover_backgrounds(backgrounds_dir: str | Path, aux_dir: str | Path) -> list[BackgroundEntry]:
    """Pair background PNGs with <stem>.seg.png and <stem>.depth.{png,f32}
    from the aux directory; unpaired backgrounds are skipped with a log line."""
    backgrounds_dir, aux_dir = Path(backgrounds_dir), Path(aux_dir)
    entries = []
    for image_path in sorted(backgrounds_dir.glob("*.png")):
        stem = image_path.stem
        seg = aux_dir / f"{stem}.seg.png"
        depth_png = aux_dir / f"{stem}.depth.png"
        depth_f32 = aux_dir / f"{stem}.depth.f32"
        depth = depth_png if depth_png.exists() else depth_f32
        if not seg.exists() or not depth.exists():
            log.warning("background %s skipped: missing seg/depth", stem)
            continue
        entries.append(BackgroundEntry(stem, image_path, seg, depth))
    return entries


def make_renderer(config: PipelineConfig) -> Callable[[RenderRequest, np.ndarray], RenderResult]:
    """Bind the configured render path: remote with optional fallback, or
    the built-in blender."""
    style = RenderStyle(
        palette=tuple(tuple(c) for c in config.render.palette),
        feather_px=config.render.feather_px,
    )
    if config.render.endpoint:
        retry = RetryPolicy(config.render.retry_attempts, config.render.retry_backoff_s)

        def remote(req: RenderRequest, base_block: np.ndarray) -> RenderResult:
            return render_remote(
                req,
                config.render.endpoint,
                retry=retry,
                fallback=config.render.fallback,
                style=style,
                base_block=base_block,
            )

        return remote

    def builtin(req: RenderRequest, base_block: np.ndarray) -> RenderResult:
        return render_builtin(req, style=style, base_block=base_block)

    return builtin


def _synthesize_one(
    slot: int,
    entries: list[BackgroundEntry],
    lexicon: Lexicon,
    seed: int,
    config: PipelineConfig,
    renderer: Callable[[RenderRequest, np.ndarray], RenderResult],
    font_path: str,
) -> tuple[str, np.ndarray, AnnotationRecord, str] | None:
    """Produce one output image for a slot, trying each background once.
    Deterministic per (seed, slot, try)."""
    ds = config.dataset
    pl = config.placement
    for attempt in range(len(entries)):
        entry = entries[(slot + attempt) % len(entries)]
        rng = np.random.default_rng([seed, slot, attempt])
        background = load_image(entry.image_path)
        if background.ndim == 2:
            background = np.stack([background] * 3, axis=-1)
        img_h, img_w = background.shape[:2]
        labels, table = load_segmentation(entry.seg_path)
        seg = SegmentationMap(labels=labels, class_table=table)
        depth = DepthMap(values=load_depth(entry.depth_path))

        regions = []
        for region in candidate_regions(seg, frozenset(pl.allowed_classes), pl.min_area):
            fitted = fit_plane(depth, region)
            if fitted.degenerate:
                continue
            if fitted.rms_residual <= planarity_threshold(depth, fitted, pl.tau_plane_fraction):
                regions.append(fitted)
        if not regions:
            log.info("slot %d: background %s has no plausible regions", slot, entry.stem)
            continue

        current = background.copy()
        instances = []
        k = int(rng.integers(1, ds.k_max + 1))
        for j in range(k):
            region = regions[int(rng.integers(len(regions)))]
            word = lexicon.words[int(rng.integers(len(lexicon.words)))]
            height = int(
                round(
                    math.exp(
                        rng.uniform(math.log(ds.text_height_min), math.log(ds.text_height_max))
                    )
                )
            )
            glyph = rasterize_glyph(word, font_path, height)
            aspect = glyph.canvas.shape[1] / glyph.canvas.shape[0]
            quad = sample_placement(
                region,
                aspect,
                rng,
                PlacementParams(text_height=height, margin=pl.margin, max_tries=pl.max_tries),
            )
            if quad is None:
                continue
            block = make_block(quad, (img_w, img_h), config.block.s_min)
            block_img = crop_resize(current, block)
            quad_block = remap_quad(block, quad, "image_to_block")
            cond = build_condition_set(block_img, quad_block, glyph, background)
            req = RenderRequest(
                condition_set=cond,
                target_quad=quad_block,
                transcript=word,
                request_id=f"slot{slot:06d}-{j}",
                deadline_ms=config.render.deadline_ms,
            )
            result = renderer(req, block_img)
            current = paste_back(current, block, result.rendered_block)
            instances.append(Instance(quad=quad, transcript=word, renderer_tag=result.renderer_tag))
        if not instances:
            log.info("slot %d: no placements landed on %s", slot, entry.stem)
            continue
        image_id = f"img_{slot:06d}"
        return image_id, current, AnnotationRecord(image_id, tuple(instances)), entry.stem
    return None


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def manifest_digest(manifest: dict) -> str:
    body = {k: v for k, v in manifest.items() if k != "digest"}
    return hashlib.sha256(
        json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()


def synthesize_dataset(
    backgrounds_dir: str | Path,
    aux_dir: str | Path,
    out_dir: str | Path,
    lexicon: Lexicon,
    count: int,
    seed: int,
    config: PipelineConfig,
    jobs: int = 1,
) -> dict:
    """Synthesize up to `count` annotated images and write the dataset
    layout: images/, gt/, lexicon.txt, manifest.json (written last,
    atomically). Returns the manifest."""
    entries = discover_backgrounds(backgrounds_dir, aux_dir)
    if not entries:
        raise InvalidArgumentError("no usable backgrounds (need paired seg + depth)")
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "gt").mkdir(parents=True, exist_ok=True)

    renderer = make_renderer(config)
    font_path = config.dataset.font_path or default_font_path()

    def work(slot: int):
        return _synthesize_one(slot, entries, lexicon, seed, config, renderer, font_path)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, range(count)))
    else:
        results = [work(slot) for slot in range(count)]

    produced = [r for r in results if r is not None]
    records = []
    for image_id, image, annotation, bg_stem in sorted(produced, key=lambda r: r[0]):
        image_path = out_dir / "images" / f"{image_id}.png"
        save_image(image_path, image)
        gt_path = write_icdar_annotations([annotation], out_dir / "gt")[0]
        records.append(
            {
                "image_id": image_id,
                "image": f"images/{image_id}.png",
                "gt": f"gt/gt_{image_id}.txt",
                "image_sha256": _sha256_file(image_path),
                "gt_sha256": _sha256_file(gt_path),
                "background": bg_stem,
                "instance_count": len(annotation.instances),
            }
        )

    # lexicon copy keeps the dataset self-validating
    (out_dir / "lexicon.txt").write_text("\n".join(lexicon.words) + "\n", encoding="utf-8")

    manifest = {
        "tool_version": __version__,
        "seed": seed,
        "config_digest": config.digest(),
        "lexicon_digest": lexicon.source_digest,
        "global": {
            "images": len(records),
            "instances": sum(r["instance_count"] for r in records),
            "requested": count,
        },
        "records": records,
    }
    manifest["digest"] = manifest_digest(manifest)
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, out_dir / "manifest.json")
    return manifest


# ---------------------------------------------------------------------------
# validation


def validate_dataset(dataset_dir: str | Path) -> dict:
    """Check manifest digest, image/gt pairing and hashes, quad geometry,
    and lexicon membership. Returns a machine-readable report."""
    dataset_dir = Path(dataset_dir)
    manifest_path = dataset_dir / "manifest.json"
    if not manifest_path.exists():
        raise GlyphforgeError(f"missing manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    report: dict = {"checks": {}, "ok": True}

    def check(name: str, passed: int, failures: list[str]) -> None:
        report["checks"][name] = {"pass": passed, "fail": len(failures), "failures": failures[:20]}
        if failures:
            report["ok"] = False

    check(
        "manifest_digest",
        int(manifest.get("digest") == manifest_digest(manifest)),
        [] if manifest.get("digest") == manifest_digest(manifest) else ["digest mismatch"],
    )

    lexicon_path = dataset_dir / "lexicon.txt"
    words = set()
    if lexicon_path.exists():
        words = {w for w in lexicon_path.read_text(encoding="utf-8").splitlines() if w}

    pairing_fail, hash_fail, geom_fail, lex_fail = [], [], [], []
    pairing_ok = hash_ok = geom_ok = lex_ok = 0
    for record in manifest.get("records", []):
        image_id = record["image_id"]
        image_path = dataset_dir / record["image"]
        gt_path = dataset_dir / record["gt"]
        if not image_path.exists() or not gt_path.exists():
            pairing_fail.append(image_id)
            continue
        pairing_ok += 1
        if (
            _sha256_file(image_path) != record["image_sha256"]
            or _sha256_file(gt_path) != record["gt_sha256"]
        ):
            hash_fail.append(image_id)
        else:
            hash_ok += 1
        from PIL import Image

        with Image.open(image_path) as img:
            img_w, img_h = img.size
        try:
            annotations = parse_icdar_file(gt_path)
        except GlyphforgeError as e:
            geom_fail.append(f"{image_id}: {e}")
            continue
        for quad, transcript in annotations:
            arr = quad.array
            if arr.min() < 0 or arr[:, 0].max() > img_w or arr[:, 1].max() > img_h:
                geom_fail.append(f"{image_id}: quad out of bounds")
            else:
                geom_ok += 1
            if words:
                if transcript in words:
                    lex_ok += 1
                else:
                    lex_fail.append(f"{image_id}: {transcript!r} not in lexicon")

    check("pairing", pairing_ok, pairing_fail)
    check("content_hashes", hash_ok, hash_fail)
    check("quad_geometry", geom_ok, geom_fail)
    check("lexicon_membership", lex_ok, lex_fail)
    return report
