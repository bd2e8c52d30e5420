"""Exception types shared across the texture baking pipeline."""


class TexbakeError(Exception):
    """Base class for all texbake-specific errors."""


class ParseError(TexbakeError):
    """A mesh file record could not be parsed."""


class MissingUVs(TexbakeError):
    """A face in the input mesh has no texture-coordinate indices."""


class EmptyMesh(TexbakeError):
    """The mesh has no usable faces or vertices."""


class InvalidCount(TexbakeError):
    """A count parameter is outside its valid range."""


class ResolutionMismatch(TexbakeError):
    """Two buffers that must share a resolution do not."""


class EmptyCandidates(TexbakeError):
    """View selection was invoked with no candidate poses."""


class EmptyForeground(TexbakeError):
    """A view contains no foreground pixels, so it cannot be cropped."""


class GeneratorError(TexbakeError):
    """Base class for image-generator failures."""


class BackendUnavailable(GeneratorError):
    """The generator backend could not be reached or returned a failure status."""


class Timeout(GeneratorError):
    """The generator backend did not answer within the configured deadline."""


class ProtocolError(GeneratorError):
    """The generator backend answered with a malformed payload."""


class InvalidBatch(GeneratorError):
    """A batch generation call received an unusable request list."""


class BatchFailure(GeneratorError):
    """One or more items of a batch failed; carries (index, error) pairs."""

    def __init__(self, failures: list[tuple[int, Exception]]):
        self.failures = failures
        detail = "; ".join(f"[{i}] {type(e).__name__}: {e}" for i, e in failures)
        super().__init__(f"{len(failures)} batch item(s) failed: {detail}")


class SizeMismatch(GeneratorError):
    """Views assembled into a grid do not share a common size."""
