import json
from pathlib import Path

import numpy as np
import pytest

from glyphforge.glyphs import default_font_path
from glyphforge.imio import save_depth_png, save_image, save_segmentation


@pytest.fixture(scope="session")
def font():
    return default_font_path()


@pytest.fixture(scope="session")
def mono_font():
    return default_font_path(monospace=True)


def smooth_image(w: int, h: int, seed: int = 0) -> np.ndarray:
    """Gentle 2D gradient plus low-frequency waves; slope stays small so
    bilinear resample round-trips are near-exact."""
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    base = 60 + 0.08 * x + 0.05 * y
    waves = 40 * np.sin(x / 97.0 + seed) * np.cos(y / 83.0)
    channels = [base + waves, base + 0.5 * waves + 20, 200 - base * 0.3]
    return np.clip(np.stack(channels, axis=-1), 0, 255).astype(np.uint8)


def textured_image(w: int, h: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def make_scene_fixture(root: Path, n: int = 3, w: int = 640, h: int = 480) -> tuple[Path, Path]:
    """Backgrounds plus paired segmentation (one big wall region) and a
    planar depth map."""
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


@pytest.fixture()
def scene_dirs(tmp_path):
    return make_scene_fixture(tmp_path)


@pytest.fixture()
def lexicon_file(tmp_path):
    path = tmp_path / "lexicon.txt"
    words = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"]
    path.write_text("\n".join(words) + "\n", encoding="utf-8")
    return path
