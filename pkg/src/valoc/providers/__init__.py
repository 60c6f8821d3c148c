from .base import (
    DEFAULT_CHAT_KEY_ENV,
    DEFAULT_EMBED_KEY_ENV,
    DEFAULT_MAX_INFLIGHT,
    ChatProvider,
    ChatRequest,
    EmbeddingVector,
    ProviderConfig,
    TextEmbedder,
    VisualProvider,
    cosine,
    map_concurrent,
    unit_vector,
)
from .cache import CachedChat, CachedEmbedder, ResponseCache
from .features import FEATURE_MAGIC, FeatureStore, read_feature_file, write_feature_file
from .http import OpenAIChat, OpenAIEmbedder, TransportFailure, requests_transport
from .mock import (
    MockEmbedder,
    MockVisualProvider,
    ScriptedChat,
    SimulatedChat,
    mock_embedder_build,
)

__all__ = [
    "DEFAULT_CHAT_KEY_ENV",
    "DEFAULT_EMBED_KEY_ENV",
    "DEFAULT_MAX_INFLIGHT",
    "ChatProvider",
    "ChatRequest",
    "EmbeddingVector",
    "ProviderConfig",
    "TextEmbedder",
    "VisualProvider",
    "cosine",
    "map_concurrent",
    "unit_vector",
    "CachedChat",
    "CachedEmbedder",
    "ResponseCache",
    "FEATURE_MAGIC",
    "FeatureStore",
    "read_feature_file",
    "write_feature_file",
    "OpenAIChat",
    "OpenAIEmbedder",
    "TransportFailure",
    "requests_transport",
    "MockEmbedder",
    "MockVisualProvider",
    "ScriptedChat",
    "SimulatedChat",
    "mock_embedder_build",
]
