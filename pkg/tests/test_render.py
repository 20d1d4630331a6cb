import numpy as np
import pytest

from glyphforge.errors import (
    InvalidArgumentError,
    RemoteStatusError,
    RemoteTimeoutError,
)
from glyphforge.geometry import Quad
from glyphforge.glyphs import build_condition_set, rasterize_glyph
from glyphforge.imio import from_b64_png
from glyphforge.mock_experts import MockExpertServer
from glyphforge.render import (
    RenderRequest,
    RenderStyle,
    RetryPolicy,
    render_builtin,
    render_remote,
    request_payload,
)
from tests.conftest import smooth_image

QUAD = Quad.from_points([(120, 200), (380, 210), (375, 290), (115, 280)])


def make_request(font, block=None, word="hello", quad=QUAD, request_id="req-1", deadline_ms=10_000):
    if block is None:
        block = smooth_image(512, 512, seed=6)
    glyph = rasterize_glyph(word, font, 40)
    cs = build_condition_set(block, quad, glyph, block)
    return (
        RenderRequest(
            condition_set=cs,
            target_quad=quad,
            transcript=word,
            request_id=request_id,
            deadline_ms=deadline_ms,
        ),
        block,
    )


class TestRenderRequest:
    def test_transcript_mismatch_rejected(self, font):
        req, block = make_request(font)
        with pytest.raises(InvalidArgumentError):
            RenderRequest(
                condition_set=req.condition_set,
                target_quad=req.target_quad,
                transcript="other",
                request_id="x",
            )


class TestRenderBuiltin:
    def test_white_background_gets_dark_ink(self, font):
        block = np.full((512, 512, 3), 255, dtype=np.uint8)
        req, block = make_request(font, block=block)
        result = render_builtin(req, base_block=block)
        changed = np.any(result.rendered_block != block, axis=-1)
        ink_pixels = result.rendered_block[changed].astype(np.float64)
        luma = ink_pixels @ np.array([0.299, 0.587, 0.114])
        # the darkest blended pixels carry the chosen ink color
        assert luma.min() <= 64

    def test_blank_glyph_leaves_block_unchanged(self, font):
        block = smooth_image(512, 512, seed=6)
        glyph = rasterize_glyph(" ", font, 40)  # whitespace has no ink
        cs = build_condition_set(block, QUAD, glyph, block)
        req = RenderRequest(cs, QUAD, " ", "req-blank")
        result = render_builtin(req, base_block=block)
        assert np.array_equal(result.rendered_block, block)

    def test_diff_support_within_word_mask(self, font):
        req, block = make_request(font)
        result = render_builtin(req, base_block=block)
        diff = np.any(result.rendered_block != block, axis=-1)
        assert not np.any(diff & (req.condition_set.word_mask == 0))

    def test_deterministic(self, font):
        req, block = make_request(font)
        a = render_builtin(req, base_block=block)
        b = render_builtin(req, base_block=block)
        assert np.array_equal(a.rendered_block, b.rendered_block)

    def test_works_without_base_block(self, font):
        req, block = make_request(font)
        result = render_builtin(req)
        assert result.rendered_block.shape == (512, 512, 3)
        diff = np.any(result.rendered_block != block, axis=-1)
        assert not np.any(diff & (req.condition_set.word_mask == 0))

    def test_palette_contrast_floor(self, font):
        block = np.full((512, 512, 3), 255, dtype=np.uint8)
        req, block = make_request(font, block=block)
        style = RenderStyle(palette=((250, 250, 250), (10, 10, 120)))
        result = render_builtin(req, style=style, base_block=block)
        changed = np.any(result.rendered_block != block, axis=-1)
        # near-white palette entry fails the contrast floor; dark blue wins
        pixels = result.rendered_block[changed]
        assert (pixels[:, 2] > pixels[:, 0]).any()

    def test_tag_and_dims(self, font):
        req, block = make_request(font)
        result = render_builtin(req, base_block=block)
        assert result.renderer_tag == "built-in"
        assert result.rendered_block.shape == (512, 512, 3)


class TestRenderRemote:
    def test_echo_round_trip_bit_exact(self, font):
        req, block = make_request(font)
        with MockExpertServer(render_mode="echo") as server:
            result = render_remote(req, server.endpoint)
        assert result.renderer_tag == "remote"
        assert np.array_equal(result.rendered_block, req.condition_set.masked_block)

    def test_payload_is_decodable(self, font):
        req, _ = make_request(font)
        payload = request_payload(req)
        assert payload["request_id"] == "req-1"
        assert from_b64_png(payload["masked_block"]).shape == (512, 512, 3)
        assert from_b64_png(payload["word_mask"]).shape == (512, 512)

    def test_server_error_surfaced(self, font):
        req, _ = make_request(font)
        with MockExpertServer(render_mode="error") as server:
            with pytest.raises(RemoteStatusError) as exc:
                render_remote(req, server.endpoint, fallback=True)
        assert exc.value.status_code == 400
        assert "scripted failure" in str(exc.value)

    def test_unreachable_falls_back(self, font):
        req, block = make_request(font)
        result = render_remote(
            req,
            "http://127.0.0.1:9",  # discard port: connection refused
            retry=RetryPolicy(attempts=2, backoff_s=0.0),
            fallback=True,
            base_block=block,
        )
        assert result.renderer_tag == "built-in"

    def test_unreachable_without_fallback_raises(self, font):
        req, _ = make_request(font)
        with pytest.raises(RemoteTimeoutError):
            render_remote(
                req,
                "http://127.0.0.1:9",
                retry=RetryPolicy(attempts=2, backoff_s=0.0),
                fallback=False,
            )

    def test_timeout_fallback_and_error(self, font):
        req, block = make_request(font, deadline_ms=300)
        with MockExpertServer(render_mode="hang", hang_seconds=2.0) as server:
            result = render_remote(
                req,
                server.endpoint,
                retry=RetryPolicy(attempts=1),
                fallback=True,
                base_block=block,
            )
            assert result.renderer_tag == "built-in"
            with pytest.raises(RemoteTimeoutError):
                render_remote(req, server.endpoint, retry=RetryPolicy(attempts=1), fallback=False)

    def test_retry_then_success(self, font):
        req, _ = make_request(font)
        with MockExpertServer(render_mode="fail_then_echo", render_fail_times=2) as server:
            result = render_remote(
                req, server.endpoint, retry=RetryPolicy(attempts=3, backoff_s=0.0)
            )
        assert result.renderer_tag == "remote"
