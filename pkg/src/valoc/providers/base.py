"""Provider contracts: chat completion, text embedding, visual features."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Protocol, TypeVar

import numpy as np

DEFAULT_CHAT_KEY_ENV = "ASK2LOC_CHAT_KEY"
DEFAULT_EMBED_KEY_ENV = "ASK2LOC_EMBED_KEY"

# in-flight cap for batched provider calls
DEFAULT_MAX_INFLIGHT = 4

UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self):
        if not self.user:
            raise ValueError("ChatRequest.user must be non-empty")
        if self.temperature < 0:
            raise ValueError("ChatRequest.temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("ChatRequest.max_tokens must be positive")


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A fixed-dimension real vector, unit-normalized unless flagged."""

    values: np.ndarray
    unit_norm: bool = True

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def unit_vector(values: np.ndarray) -> EmbeddingVector:
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return EmbeddingVector(values=v / norm, unit_norm=True)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    va, vb = a.values, b.values
    denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
    if denom == 0.0:
        return 0.0
    return float(np.dot(va, vb) / denom)


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str
    api_key_env: str
    model_name: str
    timeout_s: float = 30.0
    max_retries: int = 3
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if self.max_retries > 5 or self.max_retries < 0:
            raise ValueError("max_retries must be in [0, 5]")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")

    def api_key(self) -> str:
        return os.environ.get(self.api_key_env, "")


class ChatProvider(Protocol):
    model_name: str

    def chat(self, req: ChatRequest) -> str: ...


class TextEmbedder(Protocol):
    model_name: str
    dim: int

    def embed_text(self, text: str) -> EmbeddingVector: ...


class VisualProvider(Protocol):
    dim: int

    def visual_feature(self, video_id: str, seg_id: int) -> EmbeddingVector: ...


T = TypeVar("T")
R = TypeVar("R")


def map_concurrent(
    fn: Callable[[T], R], items: Iterable[T], max_workers: int = DEFAULT_MAX_INFLIGHT
) -> list[R]:
    """Apply ``fn`` over ``items`` with a bounded thread pool, keeping order."""
    items = list(items)
    if len(items) <= 1 or max_workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))
