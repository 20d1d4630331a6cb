"""Exception hierarchy shared across the package."""


class GlyphforgeError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(GlyphforgeError):
    """Degenerate or malformed geometric input (zero-area quad, etc.)."""


class InvalidArgumentError(GlyphforgeError):
    """A caller-supplied value violates an operation's precondition."""


class SingularGeometryError(GlyphforgeError):
    """A homography cannot be computed from the given correspondences."""


class DegeneratePlaneError(GlyphforgeError):
    """Depth samples are rank-deficient; no plane can be fitted."""


class ConfigurationError(GlyphforgeError):
    """Bad or missing configuration (unknown keys, absent required client)."""


class RemoteRenderError(GlyphforgeError):
    """Base for remote renderer failures."""


class RemoteTimeoutError(RemoteRenderError):
    """The remote renderer did not answer within the deadline."""


class RemoteStatusError(RemoteRenderError):
    """The remote renderer answered with an error status."""

    def __init__(self, status_code: int, message: str):
        super().__init__(f"remote renderer returned {status_code}: {message}")
        self.status_code = status_code
        self.server_message = message


class MalformedResponseError(RemoteRenderError):
    """The remote renderer's payload could not be decoded or has wrong dims."""


class ClientError(GlyphforgeError):
    """An expert client (t2i / ocr / inpaint / quality) failed."""

    def __init__(self, message: str, iterations_completed: int = 0):
        super().__init__(message)
        self.iterations_completed = iterations_completed
