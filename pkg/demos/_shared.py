"""Helpers shared by the demo scripts: synthetic fixtures and an output dir."""

from pathlib import Path

import numpy as np

from glyphforge.imio import save_depth_png, save_image, save_segmentation

OUT = Path(__file__).parent / "out"


def out_dir(name: str) -> Path:
    d = OUT / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def smooth_image(w: int, h: int, seed: int = 0) -> np.ndarray:
    """A gentle gradient-plus-waves image; looks like a lit wall."""
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    base = 60 + 0.08 * x + 0.05 * y
    waves = 40 * np.sin(x / 97.0 + seed) * np.cos(y / 83.0)
    channels = [base + waves, base + 0.5 * waves + 20, 200 - base * 0.3]
    return np.clip(np.stack(channels, axis=-1), 0, 255).astype(np.uint8)


def write_scene(root: Path, n: int = 3, w: int = 640, h: int = 480):
    """Backgrounds paired with a one-wall segmentation and a planar depth map."""
    bg_dir = root / "backgrounds"
    aux_dir = root / "aux"
    bg_dir.mkdir(parents=True, exist_ok=True)
    aux_dir.mkdir(parents=True, exist_ok=True)
    for i in range(n):
        stem = f"bg_{i:03d}"
        save_image(bg_dir / f"{stem}.png", smooth_image(w, h, seed=i))
        labels = np.zeros((h, w), dtype=np.uint16)
        labels[h // 8 : 7 * h // 8, w // 8 : 7 * w // 8] = 1
        save_segmentation(aux_dir / f"{stem}.seg.png", labels, {0: "sky", 1: "wall"})
        y, x = np.mgrid[0:h, 0:w].astype(np.float64)
        save_depth_png(aux_dir / f"{stem}.depth.png", 3.0 + 0.002 * x + 0.001 * y)
    return bg_dir, aux_dir
