"""glyphforge: create text-free backgrounds, then blend text into them.

Library surface for scene-text dataset synthesis: adaptive text-block
geometry, glyph conditioning, semantic placement, classical/remote
rendering, background orchestration, dataset emission, and detection/
recognition metrics.
"""

__version__ = "0.1.0"

from .geometry import Quad, RectWH, TextBlock, block_side, make_block  # noqa: F401
from .glyphs import ConditionSet, GlyphImage, rasterize_glyph  # noqa: F401
from .metrics import detection_prf, one_minus_ned, polygon_iou, recognition_accuracy  # noqa: F401
