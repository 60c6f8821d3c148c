"""Exception hierarchy shared across the package."""


class ValocError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(ValocError):
    """Subtitle ingestion failed (empty input, no segments, ...)."""


class SubtitleParseError(IngestError):
    """Malformed subtitle content; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ProviderError(ValocError):
    """A model provider returned an unusable response."""


class TransportError(ProviderError):
    """Network-level failure (timeouts, 5xx) that survived all retries."""


class AuthError(ProviderError):
    """The provider rejected our credentials (HTTP 401/403)."""


class RenderError(ValocError):
    """A prompt template binding was missing; names the placeholder."""


class AnswerError(ValocError):
    """The answering agent did not produce a usable yes/no reply."""


class TrainingError(ValocError):
    """Optimization produced a non-finite loss; names epoch/batch."""


class FeatureLookupError(ValocError):
    """A visual feature was requested that the store does not hold."""


class DatasetError(ValocError):
    """A dataset file violates the line-oriented schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NotFoundError(ValocError):
    """A referenced resource (video, session) does not exist."""


class ConflictError(ValocError):
    """An operation was attempted in an incompatible session state."""
