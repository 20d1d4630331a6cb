"""Image and sidecar-file I/O: PNG codecs, base64 wire helpers, and the
segmentation / depth file formats consumed by placement."""

from __future__ import annotations

import base64
import io
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidArgumentError

DEPTH_MAGIC = b"DPTH"
DEPTH_PNG_SCALE = 1000.0  # stored value / 1000 = depth


def encode_png(arr: np.ndarray) -> bytes:
    """Lossless PNG bytes from a uint8 (gray or RGB) or uint16 array."""
    if arr.dtype == np.uint16:
        img = Image.fromarray(arr.astype(np.int32), mode="I").convert("I;16")
    else:
        img = Image.fromarray(arr)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data))
    if img.mode in ("I;16", "I"):
        return np.asarray(img, dtype=np.uint16)
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    return np.asarray(img)


def to_b64_png(arr: np.ndarray) -> str:
    return base64.b64encode(encode_png(arr)).decode("ascii")


def from_b64_png(s: str) -> np.ndarray:
    return decode_png(base64.b64decode(s))


def save_image(path: str | Path, arr: np.ndarray) -> None:
    Path(path).write_bytes(encode_png(arr))


def load_image(path: str | Path) -> np.ndarray:
    return decode_png(Path(path).read_bytes())


def save_segmentation(path: str | Path, labels: np.ndarray, class_table: dict[int, str]) -> None:
    """16-bit single-channel PNG of class ids, plus a JSON sidecar mapping
    id -> class name at <path>.json."""
    path = Path(path)
    save_image(path, labels.astype(np.uint16))
    sidecar = {str(k): v for k, v in sorted(class_table.items())}
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8"
    )


def load_segmentation(path: str | Path) -> tuple[np.ndarray, dict[int, str]]:
    path = Path(path)
    labels = load_image(path)
    if labels.ndim != 2:
        raise InvalidArgumentError(f"{path}: segmentation PNG must be single-channel")
    sidecar = path.with_suffix(path.suffix + ".json")
    table = {int(k): v for k, v in json.loads(sidecar.read_text(encoding="utf-8")).items()}
    return labels.astype(np.int64), table


def save_depth_png(path: str | Path, depth: np.ndarray) -> None:
    """16-bit PNG, value = round(depth * 1000)."""
    q = np.round(np.clip(depth, 0, 65535 / DEPTH_PNG_SCALE) * DEPTH_PNG_SCALE)
    save_image(path, q.astype(np.uint16))


def load_depth_png(path: str | Path) -> np.ndarray:
    raw = load_image(path)
    if raw.ndim != 2:
        raise InvalidArgumentError(f"{path}: depth PNG must be single-channel")
    return raw.astype(np.float64) / DEPTH_PNG_SCALE


def save_depth_f32(path: str | Path, depth: np.ndarray) -> None:
    """Raw float32 grid: magic 'DPTH', u32 width, u32 height (little-endian),
    then row-major float32 samples."""
    h, w = depth.shape
    header = DEPTH_MAGIC + struct.pack("<II", w, h)
    Path(path).write_bytes(header + depth.astype("<f4").tobytes())


def load_depth_f32(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != DEPTH_MAGIC:
        raise InvalidArgumentError(f"{path}: bad depth magic {data[:4]!r}")
    w, h = struct.unpack("<II", data[4:12])
    grid = np.frombuffer(data[12:], dtype="<f4")
    if grid.size != w * h:
        raise InvalidArgumentError(f"{path}: payload size mismatch ({grid.size} != {w*h})")
    return grid.reshape(h, w).astype(np.float64)


def load_depth(path: str | Path) -> np.ndarray:
    """Dispatch on extension: .png -> quantized PNG, anything else -> raw f32."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        return load_depth_png(path)
    return load_depth_f32(path)
