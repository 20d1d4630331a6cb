"""Command-line entry point.

Exit codes: 0 success, 1 empty or failed result, 2 configuration or
usage error. All randomness flows from --seed.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from .background import (
    BackgroundThresholds,
    HttpExpertClient,
    read_prompts,
    run_background_pipeline,
)
from .config import load_config
from .dataset import (
    Lexicon,
    parse_icdar_file,
    synthesize_dataset,
    validate_dataset,
)
from .errors import ConfigurationError, GlyphforgeError, InvalidArgumentError
from .geometry import Quad, crop_resize, make_block, paste_back, remap_quad
from .glyphs import build_condition_set, default_font_path, rasterize_glyph
from .imio import load_image, save_image
from .metrics import RecogPair, detection_prf, one_minus_ned, recognition_accuracy
from .render import RenderRequest, render_builtin


class _JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        return json.dumps(
            {
                "level": record.levelname,
                "logger": record.name,
                "message": record.getMessage(),
            }
        )


def _setup_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLogFormatter())
    logging.basicConfig(level=level.upper(), handlers=[handler], force=True)


def _load_cfg(config_path: str | None, overrides: dict | None = None):
    try:
        return load_config(config_path, overrides)
    except (ConfigurationError, OSError) as e:
        raise click.exceptions.Exit(2) from _echo_err(f"config error: {e}")


def _echo_err(msg: str):
    click.echo(msg, err=True)
    return None


def _parse_quad(spec: str) -> Quad:
    try:
        vals = [float(v) for v in spec.split(",")]
        if len(vals) != 8:
            raise ValueError("need 8 comma-separated numbers")
        return Quad.from_points(np.array(vals).reshape(4, 2))
    except (ValueError, GlyphforgeError) as e:
        _echo_err(f"malformed quad {spec!r}: {e}")
        raise click.exceptions.Exit(2)


@click.group()
@click.option("--log-level", default="warning", show_default=True)
@click.option("--jobs", default=os.cpu_count() or 1, show_default="logical CPUs")
@click.pass_context
def main(ctx, log_level, jobs):
    """Scene-text synthesis: backgrounds, placement, rendering, metrics."""
    _setup_logging(log_level)
    ctx.ensure_object(dict)
    ctx.obj["jobs"] = jobs


_config_option = click.option(
    "--config", "config_path", envvar="GLYPHFORGE_CONFIG", default=None, type=click.Path()
)


@main.command()
@click.option("--prompts", "prompts_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@_config_option
@click.pass_context
def backgrounds(ctx, prompts_path, out_dir, config_path):
    """Stage 1: synthesize, erase, and evaluate text-free backgrounds."""
    cfg = _load_cfg(config_path)
    if not cfg.background.endpoint:
        _echo_err("config error: background.endpoint is not set (expert services required)")
        raise click.exceptions.Exit(2)
    prompts = read_prompts(prompts_path)
    if not prompts:
        _echo_err("warning: prompt file is empty; nothing to do")
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "backgrounds.jsonl").write_text("", encoding="utf-8")
        return
    clients = HttpExpertClient(cfg.background.endpoint).as_clients()
    thresholds = BackgroundThresholds(
        quality=cfg.background.quality_threshold,
        tau_ocr=cfg.background.tau_ocr,
        dilate_margin=cfg.background.dilate_margin,
        max_iters=cfg.background.max_iters,
    )
    records = run_background_pipeline(prompts, clients, out_dir, thresholds, jobs=ctx.obj["jobs"])
    accepted = sum(r.verdict == "accepted" for r in records)
    click.echo(json.dumps({"prompts": len(prompts), "accepted": accepted}))
    if accepted == 0:
        if all(
            r.reject_reason and r.reject_reason.startswith("synthesis-failed") for r in records
        ):
            _echo_err("all syntheses failed; check background.endpoint")
            raise click.exceptions.Exit(2)
        raise click.exceptions.Exit(1)


@main.command()
@click.option("--backgrounds", "backgrounds_dir", required=True, type=click.Path(exists=True))
@click.option("--aux", "aux_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--count", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--lexicon", "lexicon_path", default=None, type=click.Path(exists=True))
@_config_option
@click.pass_context
def synth(ctx, backgrounds_dir, aux_dir, out_dir, count, seed, lexicon_path, config_path):
    """Synthesize an annotated scene-text dataset."""
    cfg = _load_cfg(config_path)
    lex_path = lexicon_path or cfg.dataset.lexicon_path
    if not lex_path:
        _echo_err("config error: no lexicon (use --lexicon or dataset.lexicon_path)")
        raise click.exceptions.Exit(2)
    if count < 1:
        _echo_err("count must be >= 1")
        raise click.exceptions.Exit(1)
    try:
        lexicon = Lexicon.load(lex_path)
        manifest = synthesize_dataset(
            backgrounds_dir, aux_dir, out_dir, lexicon, count, seed, cfg, jobs=ctx.obj["jobs"]
        )
    except InvalidArgumentError as e:
        _echo_err(str(e))
        raise click.exceptions.Exit(1)
    click.echo(json.dumps({"digest": manifest["digest"], "images": manifest["global"]["images"]}))
    if manifest["global"]["images"] == 0:
        raise click.exceptions.Exit(1)


@main.command()
@click.option("--quad", "quad_spec", required=True, help="x1,y1,x2,y2,x3,y3,x4,y4")
@click.option("--image-size", "image_size", required=True, help="WxH, e.g. 1024x768")
@_config_option
def block(quad_spec, image_size, config_path):
    """Print the adaptive text block for a quad as JSON."""
    cfg = _load_cfg(config_path)
    quad = _parse_quad(quad_spec)
    try:
        w, h = (int(v) for v in image_size.lower().split("x"))
    except ValueError:
        _echo_err(f"malformed --image-size {image_size!r}, expected WxH")
        raise click.exceptions.Exit(2)
    tb = make_block(quad, (w, h), cfg.block.s_min)
    click.echo(
        json.dumps(
            {
                "center": list(tb.center),
                "side_raw": tb.side_raw,
                "side_effective": tb.side_effective,
                "crop_origin": list(tb.crop_origin),
                "scale": tb.scale,
                "source_rect": [tb.source_rect.x, tb.source_rect.y, tb.source_rect.w, tb.source_rect.h],
            }
        )
    )


@main.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--quad", "quad_spec", required=True)
@click.option("--text", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@_config_option
def render(image_path, quad_spec, text, out_path, seed, config_path):
    """Blend one text instance into an image (single-image mode; no
    fallback from a failing remote endpoint)."""
    cfg = _load_cfg(config_path)
    quad = _parse_quad(quad_spec)
    image = load_image(image_path)
    if image.ndim == 2:
        image = np.stack([image] * 3, axis=-1)
    img_h, img_w = image.shape[:2]
    tb = make_block(quad, (img_w, img_h), cfg.block.s_min)
    block_img = crop_resize(image, tb)
    quad_block = remap_quad(tb, quad, "image_to_block")
    glyph = rasterize_glyph(
        text,
        cfg.dataset.font_path or default_font_path(),
        max(8, int(round(tb.scale * tb.source_rect.h))),
    )
    cond = build_condition_set(block_img, quad_block, glyph, image)
    req = RenderRequest(cond, quad_block, text, request_id=f"render-{seed}", deadline_ms=cfg.render.deadline_ms)
    if cfg.render.endpoint:
        from .render import RetryPolicy, render_remote

        result = render_remote(
            req,
            cfg.render.endpoint,
            retry=RetryPolicy(cfg.render.retry_attempts, cfg.render.retry_backoff_s),
            fallback=False,
            base_block=block_img,
        )
    else:
        result = render_builtin(req, base_block=block_img)
    save_image(out_path, paste_back(image, tb, result.rendered_block))
    click.echo(json.dumps({"renderer": result.renderer_tag, "out": str(out_path)}))


@main.group(name="eval")
def eval_group():
    """Detection and recognition metrics."""


@eval_group.command(name="det")
@click.option("--pred", "pred_dir", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True))
@click.option("--iou", "iou_threshold", default=0.5, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path())
def eval_det(pred_dir, gt_dir, iou_threshold, out_path):
    """Polygon-IoU precision/recall/hmean over paired ICDAR files."""
    gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
    tp = fp = fn = 0
    for gt_file in sorted(gt_dir.glob("*.txt")):
        gts = [q for q, _ in parse_icdar_file(gt_file)]
        pred_file = pred_dir / gt_file.name
        preds = [q for q, _ in parse_icdar_file(pred_file)] if pred_file.exists() else []
        result = detection_prf(preds, gts, iou_threshold)
        tp += result.tp
        fp += result.fp
        fn += result.fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    hmean = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    report = json.dumps(
        {"tp": tp, "fp": fp, "fn": fn, "precision": precision, "recall": recall, "hmean": hmean}
    )
    if out_path:
        Path(out_path).write_text(report + "\n", encoding="utf-8")
    click.echo(report)


@eval_group.command(name="rec")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--case-insensitive", is_flag=True, default=False)
@click.option("--out", "out_path", default=None, type=click.Path())
def eval_rec(pairs_path, case_insensitive, out_path):
    """Recognition accuracy and mean 1-NED from a TSV of (pred, gt)."""
    pairs = []
    for line in Path(pairs_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        pred, _, gt = line.partition("\t")
        pairs.append(RecogPair(prediction=pred, ground_truth=gt))
    if not pairs:
        _echo_err("no pairs in input")
        raise click.exceptions.Exit(1)
    report = json.dumps(
        {
            "accuracy": recognition_accuracy(pairs, case_sensitive=not case_insensitive),
            "one_minus_ned": sum(one_minus_ned(p.prediction, p.ground_truth) for p in pairs)
            / len(pairs),
            "pairs": len(pairs),
        }
    )
    if out_path:
        Path(out_path).write_text(report + "\n", encoding="utf-8")
    click.echo(report)


@main.command()
@click.argument("dataset_dir", type=click.Path(exists=True))
def validate(dataset_dir):
    """Validate a synthesized dataset against its manifest."""
    try:
        report = validate_dataset(dataset_dir)
    except GlyphforgeError as e:
        _echo_err(str(e))
        raise click.exceptions.Exit(1)
    click.echo(json.dumps(report))
    if not report["ok"]:
        raise click.exceptions.Exit(1)


if __name__ == "__main__":
    main()
