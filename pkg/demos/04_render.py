"""Rendering: built-in blender and the remote wire protocol.

The built-in renderer picks an ink color that contrasts with the local
background and alpha-blends the warped glyph inside the word mask. The
remote path POSTs the condition images (base64 PNG) to an HTTP service;
here we talk to the bundled mock server, whose "echo" mode returns the
masked block unchanged — handy for verifying the transport is lossless.
"""

import numpy as np

from glyphforge.geometry import Quad
from glyphforge.glyphs import build_condition_set, default_font_path, rasterize_glyph
from glyphforge.imio import save_image
from glyphforge.mock_experts import MockExpertServer
from glyphforge.render import RenderRequest, RetryPolicy, render_builtin, render_remote

from _shared import out_dir, smooth_image

out = out_dir("04_render")
font = default_font_path()

block = smooth_image(512, 512, seed=6)
quad = Quad.from_points([(80, 210), (430, 220), (425, 300), (75, 290)])
word = "COFFEE"
glyph = rasterize_glyph(word, font, 56)
cond = build_condition_set(block, quad, glyph, block)
req = RenderRequest(cond, quad, word, request_id="demo-04", deadline_ms=5000)

print("== built-in renderer ==")
result = render_builtin(req, base_block=block)
diff = np.any(result.rendered_block != block, axis=-1)
outside = diff & (cond.word_mask == 0)
print(f"tag={result.renderer_tag}  changed px={int(diff.sum())}  outside mask={int(outside.sum())}")
save_image(out / "builtin.png", result.rendered_block)

print("\n== remote renderer against the mock server ==")
with MockExpertServer(render_mode="echo") as server:
    print(f"server at {server.endpoint}, POST /render with base64-PNG conditions")
    remote = render_remote(req, server.endpoint)
    exact = np.array_equal(remote.rendered_block, cond.masked_block)
    print(f"tag={remote.renderer_tag}  echo round-trip bit-exact: {exact}")

print("\n== failure handling ==")
with MockExpertServer(render_mode="hang", hang_seconds=2.0) as server:
    slow_req = RenderRequest(cond, quad, word, request_id="demo-04b", deadline_ms=300)
    fb = render_remote(
        slow_req, server.endpoint, retry=RetryPolicy(attempts=1), fallback=True, base_block=block
    )
    print(f"server hangs past the 300 ms deadline -> fell back to {fb.renderer_tag!r}")

print(f"wrote {out}/")
