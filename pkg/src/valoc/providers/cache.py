"""Persistent response cache keyed by a content hash of the request.

The cache sits in front of retries: a warm rerun of a whole dataset build
performs zero network calls.  Writes are atomic (tempfile + replace) so
concurrent writers of the same key cannot interleave partial files.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .base import ChatProvider, ChatRequest, EmbeddingVector, TextEmbedder


class ResponseCache:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(parts: dict) -> str:
        payload = json.dumps(parts, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _path(self, kind: str, key: str) -> Path:
        return self.root / kind / key[:2] / f"{key}.json"

    def get(self, kind: str, key: str) -> Optional[Any]:
        path = self._path(kind, key)
        try:
            with open(path, encoding="utf-8") as f:
                value = json.load(f)["value"]
        except (FileNotFoundError, json.JSONDecodeError, KeyError):
            self.misses += 1
            return None
        self.hits += 1
        return value

    def put(self, kind: str, key: str, value: Any) -> None:
        path = self._path(kind, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump({"value": value}, f, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class CachedChat:
    """Wraps any chat provider with the persistent cache.

    The cache key is the content hash of (model, system, user, temperature);
    two identical requests never reach the network twice within one cache
    directory.
    """

    def __init__(self, inner: ChatProvider, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.calls_made = 0
        self.calls_saved = 0

    @property
    def model_name(self) -> str:
        return self.inner.model_name

    def chat(self, req: ChatRequest) -> str:
        key = self.cache.key(
            {
                "model": self.inner.model_name,
                "system": req.system,
                "user": req.user,
                "temperature": req.temperature,
            }
        )
        hit = self.cache.get("chat", key)
        if hit is not None:
            self.calls_saved += 1
            return hit
        text = self.inner.chat(req)
        self.calls_made += 1
        self.cache.put("chat", key, text)
        return text


class CachedEmbedder:
    def __init__(self, inner: TextEmbedder, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.calls_made = 0
        self.calls_saved = 0

    @property
    def model_name(self) -> str:
        return self.inner.model_name

    @property
    def dim(self) -> int:
        return self.inner.dim

    def embed_text(self, text: str) -> EmbeddingVector:
        key = self.cache.key({"model": self.inner.model_name, "text": text})
        hit = self.cache.get("embed", key)
        if hit is not None:
            self.calls_saved += 1
            return EmbeddingVector(np.asarray(hit, dtype=np.float64), unit_norm=True)
        vec = self.inner.embed_text(text)
        self.calls_made += 1
        self.cache.put("embed", key, [float(x) for x in vec.values])
        return vec
