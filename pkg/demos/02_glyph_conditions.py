"""Glyph conditioning.

A renderer that draws text needs to know *what* to draw and *where*. We
hand it four aligned images: the block with the target region blanked out,
a word-level mask of that region, a per-character segmentation (each pixel
labeled with its character class), and a clean rasterization of the word
itself. This demo builds all four for one placement and saves them.
"""

import numpy as np

from glyphforge.geometry import Quad
from glyphforge.glyphs import CHAR_LABELS, build_condition_set, default_font_path, rasterize_glyph
from glyphforge.imio import save_image

from _shared import out_dir, smooth_image

out = out_dir("02_glyph_conditions")
font = default_font_path()

word = "Glyph!"
glyph = rasterize_glyph(word, font, 48)
print(f"rasterized {word!r} at height 48 -> canvas {glyph.canvas.shape[1]}x{glyph.canvas.shape[0]}")
print("per-character boxes (x0, y0, x1, y1):")
for ch, box in zip(word, glyph.char_boxes):
    print(f"  {ch!r}: {box}  (class {CHAR_LABELS[ch]})")
save_image(out / "glyph.png", glyph.canvas)

block = smooth_image(512, 512, seed=6)
quad = Quad.from_points([(90, 200), (420, 215), (410, 300), (80, 285)])
cond = build_condition_set(block, quad, glyph, block)

save_image(out / "masked_block.png", cond.masked_block)
save_image(out / "word_mask.png", cond.word_mask)
# scale labels (1..95) into something visible
seg_vis = (cond.char_seg_mask.astype(np.uint16) * 255 // 95).astype(np.uint8)
save_image(out / "char_seg.png", seg_vis)

labels = sorted(int(v) for v in np.unique(cond.char_seg_mask) if v)
print(f"\nword mask covers {int((cond.word_mask > 0).sum())} px")
print(f"character classes present in the warped segmentation: {labels}")
print(f"(expected {sorted({CHAR_LABELS[c] for c in word})})")
print(f"wrote {out}/")
