"""Layered pipeline configuration: TOML file, overridden by CLI flags,
with a canonical digest recorded in dataset manifests."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


@dataclass
class PlacementSection:
    allowed_classes: list[str] = field(
        default_factory=lambda: sorted(
            ["wall", "sign", "billboard", "signboard", "building", "board", "door", "poster"]
        )
    )
    min_area: int = 400
    tau_plane_fraction: float = 0.05
    margin: int = 4
    max_tries: int = 100


@dataclass
class BlockSection:
    s_min: int = 64


@dataclass
class RenderSection:
    endpoint: str = ""  # empty -> built-in only
    fallback: bool = True
    deadline_ms: int = 10_000
    retry_attempts: int = 3
    retry_backoff_s: float = 0.1
    palette: list[list[int]] = field(default_factory=list)
    feather_px: int = 1


@dataclass
class BackgroundSection:
    quality_threshold: float = 0.2
    tau_ocr: float = 0.5
    dilate_margin: int = 3
    max_iters: int = 3
    endpoint: str = ""  # expert services base URL


@dataclass
class DatasetSection:
    k_max: int = 8
    text_height_min: int = 12
    text_height_max: int = 96
    lexicon_path: str = ""
    font_path: str = ""  # empty -> bundled default
    image_format: str = "png"  # png | jpeg
    jpeg_quality: int = 95


@dataclass
class PipelineConfig:
    placement: PlacementSection = field(default_factory=PlacementSection)
    block: BlockSection = field(default_factory=BlockSection)
    render: RenderSection = field(default_factory=RenderSection)
    background: BackgroundSection = field(default_factory=BackgroundSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)

    def canonical(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


_SECTIONS = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _apply_section(section_obj, name: str, values: dict) -> None:
    known = {f.name for f in dataclasses.fields(section_obj)}
    for key, value in values.items():
        if key not in known:
            raise ConfigurationError(f"unknown config key {name}.{key}")
        setattr(section_obj, key, value)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from defaults, a TOML file, and flat overrides of the
    form {"section.key": value}. Unknown keys are rejected."""
    cfg = PipelineConfig()
    if path:
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        for section, values in data.items():
            if section not in _SECTIONS:
                raise ConfigurationError(f"unknown config section {section!r}")
            if not isinstance(values, dict):
                raise ConfigurationError(f"config section {section!r} must be a table")
            _apply_section(getattr(cfg, section), section, values)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if section not in _SECTIONS or not key:
            raise ConfigurationError(f"unknown config override {dotted!r}")
        _apply_section(getattr(cfg, section), section, {key: value})
    return cfg
