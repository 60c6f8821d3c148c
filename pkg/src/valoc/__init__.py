"""Interactive visual answer localization for instructional videos."""

from .model import (
    Dialogue,
    DialogueTurn,
    InValSample,
    PipelineConfig,
    Span,
    SubtitleCue,
    VideoSegment,
    validate_sample,
)

__version__ = "0.1.0"

__all__ = [
    "Dialogue",
    "DialogueTurn",
    "InValSample",
    "PipelineConfig",
    "Span",
    "SubtitleCue",
    "VideoSegment",
    "validate_sample",
    "__version__",
]
