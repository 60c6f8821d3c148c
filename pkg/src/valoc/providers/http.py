"""HTTP client for OpenAI-compatible chat-completion and embedding endpoints.

Transport is injectable so tests can exercise the retry/backoff logic
without sockets.  Timeouts and 5xx responses are retried with exponential
backoff up to ``max_retries``; 401/403 raise immediately.
"""

from __future__ import annotations

import time
from typing import Callable, Optional

import requests

from ..errors import AuthError, ProviderError, TransportError
from .base import ChatRequest, EmbeddingVector, ProviderConfig, unit_vector

# character budget applied before embedding; over-limit text is truncated,
# never rejected
EMBED_CHAR_BUDGET = 8000

Transport = Callable[[str, dict, dict, float], tuple[int, dict]]


class TransportFailure(Exception):
    """Retryable network-level failure (timeout, connection reset)."""


def requests_transport(url: str, headers: dict, body: dict, timeout_s: float) -> tuple[int, dict]:
    try:
        resp = requests.post(url, headers=headers, json=body, timeout=timeout_s)
    except (requests.Timeout, requests.ConnectionError) as e:
        raise TransportFailure(str(e)) from e
    try:
        payload = resp.json()
    except ValueError:
        payload = {"raw": resp.text}
    return resp.status_code, payload


class _HttpProvider:
    def __init__(self, config: ProviderConfig, transport: Optional[Transport] = None, backoff_s: float = 0.5):
        self.config = config
        self.model_name = config.model_name
        self.backoff_s = backoff_s
        self._transport = transport or requests_transport
        self.last_retries = 0

    def _post(self, path: str, body: dict) -> dict:
        url = self.config.base_url.rstrip("/") + path
        headers = {
            "Authorization": f"Bearer {self.config.api_key()}",
            "Content-Type": "application/json",
        }
        retries = 0
        last_error = "no attempt made"
        for attempt in range(self.config.max_retries + 1):
            if attempt > 0:
                retries += 1
                if self.backoff_s > 0:
                    time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                status, payload = self._transport(url, headers, body, self.config.timeout_s)
            except TransportFailure as e:
                last_error = f"transport failure: {e}"
                continue
            if status >= 500:
                last_error = f"HTTP {status}"
                continue
            if status in (401, 403):
                raise AuthError(f"HTTP {status} from {url}: check ${self.config.api_key_env}")
            if status >= 400:
                raise ProviderError(f"HTTP {status} from {url}: {payload}")
            self.last_retries = retries
            return payload
        raise TransportError(f"{url}: {last_error} after {retries} retries")


class OpenAIChat(_HttpProvider):
    def chat(self, req: ChatRequest) -> str:
        body = {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        payload = self._post("/chat/completions", body)
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ProviderError(f"malformed completion payload: {payload!r}") from None
        if not text or not text.strip():
            raise ProviderError("empty completion")
        return text


class OpenAIEmbedder(_HttpProvider):
    def __init__(self, config: ProviderConfig, dim: int, transport: Optional[Transport] = None, backoff_s: float = 0.5):
        super().__init__(config, transport, backoff_s)
        self.dim = dim

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise ValueError("embed_text: text must be non-empty after trimming")
        body = {"model": self.config.model_name, "input": text[:EMBED_CHAR_BUDGET]}
        payload = self._post("/embeddings", body)
        try:
            values = payload["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError):
            raise ProviderError(f"malformed embedding payload: {payload!r}") from None
        if len(values) != self.dim:
            raise ProviderError(f"embedding dimension {len(values)} != configured {self.dim}")
        return unit_vector(values)
