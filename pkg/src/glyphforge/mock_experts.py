"""In-process HTTP double for every expert service the pipeline talks to.

One server answers /render, /t2i, /ocr, /inpaint, and /quality with
scriptable behaviors, so tests and demos can exercise the real wire
protocol without any model being deployed."""

from __future__ import annotations

import hashlib
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .background import builtin_quality_proxy
from .imio import from_b64_png, to_b64_png


class MockExpertServer:
    """Scriptable expert stand-in.

    render_mode: "echo" (return masked_block), "hang" (sleep past any
    deadline), "error" (HTTP 400), or "fail_then_echo" (refuse
    `render_fail_times` requests with a dropped connection, then echo).
    ocr_script: list of detection lists returned by successive /ocr calls;
    the last entry repeats. Detections are dicts with quad/transcript/
    confidence keys.
    """

    def __init__(
        self,
        render_mode: str = "echo",
        render_fail_times: int = 0,
        hang_seconds: float = 5.0,
        ocr_script: list[list[dict]] | None = None,
    ):
        self.render_mode = render_mode
        self.render_fail_times = render_fail_times
        self.hang_seconds = hang_seconds
        self.ocr_script = ocr_script if ocr_script is not None else [[]]
        self._render_failures = 0
        self._ocr_calls = 0
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # --- behaviors ---------------------------------------------------------

    def _handle_render(self, body: dict) -> tuple[int, dict]:
        if self.render_mode == "error":
            return 400, {"error": "scripted failure"}
        if self.render_mode == "hang":
            time.sleep(self.hang_seconds)
        if self.render_mode == "fail_then_echo":
            with self._lock:
                if self._render_failures < self.render_fail_times:
                    self._render_failures += 1
                    raise ConnectionAbortedError("scripted drop")
        return 200, {
            "request_id": body["request_id"],
            "rendered_block": body["masked_block"],
            "model_info": "mock-echo",
        }

    def _handle_t2i(self, body: dict) -> tuple[int, dict]:
        # deterministic per-prompt texture; detailed enough to pass the
        # built-in quality proxy
        seed = int.from_bytes(hashlib.sha256(body["prompt"].encode()).digest()[:4], "little")
        rng = np.random.default_rng(seed)
        image = rng.integers(0, 256, size=(256, 256, 3), dtype=np.uint8)
        return 200, {"image": to_b64_png(image)}

    def _handle_ocr(self, body: dict) -> tuple[int, dict]:
        with self._lock:
            idx = min(self._ocr_calls, len(self.ocr_script) - 1)
            self._ocr_calls += 1
        return 200, {"detections": self.ocr_script[idx]}

    def _handle_inpaint(self, body: dict) -> tuple[int, dict]:
        image = from_b64_png(body["image"]).copy()
        mask = from_b64_png(body["mask"])
        fill = image.reshape(-1, image.shape[-1]).mean(axis=0) if image.ndim == 3 else image.mean()
        image[mask > 0] = np.round(fill).astype(np.uint8)
        return 200, {"image": to_b64_png(image)}

    def _handle_quality(self, body: dict) -> tuple[int, dict]:
        return 200, {"score": builtin_quality_proxy(from_b64_png(body["image"]))}

    # --- plumbing ----------------------------------------------------------

    def start(self) -> "MockExpertServer":
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output clean
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                routes = {
                    "/render": outer._handle_render,
                    "/t2i": outer._handle_t2i,
                    "/ocr": outer._handle_ocr,
                    "/inpaint": outer._handle_inpaint,
                    "/quality": outer._handle_quality,
                }
                handler = routes.get(self.path)
                if handler is None:
                    self.send_error(404)
                    return
                status, payload = handler(body)
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        class QuietServer(ThreadingHTTPServer):
            def handle_error(self, request, client_address):
                # scripted drops and clients that time out mid-response are
                # expected behaviors here, not worth a traceback
                pass

        self._server = QuietServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    @property
    def endpoint(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def stop(self) -> None:
        if self._server:
            self._server.shutdown()
            self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self) -> "MockExpertServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
