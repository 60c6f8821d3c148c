"""Deterministic offline providers.

Every mock is seeded and stable across processes (keys go through
sha256, not Python's randomized ``hash``), so pipelines built on mocks
are byte-reproducible.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import ProviderError
from .base import ChatRequest, EmbeddingVector, unit_vector


def _rng_for(seed: int, name: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}|{name}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


class MockEmbedder:
    """Bag-of-tokens embedder over seeded pseudo-random token vectors.

    Texts sharing more tokens get higher cosine similarity, which is all
    the relevance and detection stages need from a real backbone.
    """

    def __init__(self, seed: int, dim: int):
        if dim < 8:
            raise ValueError("mock embedder needs dim >= 8")
        self.seed = seed
        self.dim = dim
        self.model_name = f"mock-embed-d{dim}-s{seed}"
        self.calls = 0
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            raw = _rng_for(self.seed, f"tok:{token}").standard_normal(self.dim)
            vec = raw / np.linalg.norm(raw)
            self._token_cache[token] = vec
        return vec

    def embed_text(self, text: str) -> EmbeddingVector:
        tokens = text.split()
        if not tokens:
            raise ValueError("embed_text: text must be non-empty after trimming")
        self.calls += 1
        mean = np.mean([self._token_vector(t) for t in tokens], axis=0)
        return unit_vector(mean)


def mock_embedder_build(seed: int, dim: int) -> MockEmbedder:
    return MockEmbedder(seed, dim)


class MockVisualProvider:
    """Seeded pseudo-random unit vector per (video_id, seg_id)."""

    def __init__(self, seed: int, dim: int):
        self.seed = seed
        self.dim = dim
        self.calls = 0

    def visual_feature(self, video_id: str, seg_id: int) -> EmbeddingVector:
        self.calls += 1
        raw = _rng_for(self.seed, f"vis:{video_id}:{seg_id}").standard_normal(self.dim)
        return unit_vector(raw)


class ScriptedChat:
    """Replays a fixed list of replies and records every request."""

    def __init__(self, replies: list[str], model_name: str = "scripted-chat"):
        self.replies = list(replies)
        self.model_name = model_name
        self.requests: list[ChatRequest] = []
        self.calls = 0

    def chat(self, req: ChatRequest) -> str:
        self.requests.append(req)
        self.calls += 1
        if not self.replies:
            raise ProviderError("scripted chat exhausted")
        return self.replies.pop(0)


def _between(text: str, start: str, end: str | None = None) -> str:
    """Substring after the first ``start`` marker, up to ``end`` (or EOL block)."""
    i = text.find(start)
    if i < 0:
        return ""
    rest = text[i + len(start) :]
    if end is not None:
        j = rest.find(end)
        if j >= 0:
            rest = rest[:j]
    else:
        j = rest.find("\n\n")
        if j >= 0:
            rest = rest[:j]
    return rest.strip()


class SimulatedChat:
    """Deterministic stand-in for the dialogue/rewriting backend.

    Recognizes each prompt family by its fixed trailing cue and produces
    a stable reply derived only from the request content:

    * further question  -> restates the initial question as a yes/no probe
    * yes/no answering  -> parity of a content hash
    * dialogue summary  -> echoes the initial question as an intent statement
    * subtitle describe -> echoes the current subtitle (token-preserving, so
      planted text signals survive the rewriting stage)
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.model_name = f"sim-chat-s{seed}"
        self.calls = 0

    def chat(self, req: ChatRequest) -> str:
        self.calls += 1
        u = req.user

        if "Your further question:" in u or "你的问题：" in u:
            init = _between(u, "INITIAL_QUESTION: ") or _between(u, "初始问题：")
            done = u.count("\nA: ")
            return f"Do you mean: {init.rstrip('??')} (aspect {done + 1})?"

        if "TEXT_CONTENT:" in u or "参考的初始问题：" in u:
            question = _between(u, "QUESTION: ") or _between(u, "问题：")
            digest = hashlib.sha256(f"{self.seed}|{question}".encode("utf-8")).digest()
            return "yes" if digest[0] % 2 == 0 else "no"

        if "what the user really want to ask?" in u or "你的描述：" in u and "对话：" in u:
            init = _between(u, "INITIAL QUESTION: ") or _between(u, "初始问题：")
            return f"The user wants to know: {init}"

        if "what is happening now in the video?" in u or "当前字幕：" in u:
            sub = _between(u, "Current Subtitle: ") or _between(u, "当前字幕：")
            return f"Right now the video shows: {sub}"

        digest = hashlib.sha256(f"{self.seed}|{u}".encode("utf-8")).hexdigest()[:12]
        return f"ok-{digest}"
