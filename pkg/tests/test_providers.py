import itertools
import random

import numpy as np
import pytest

from valoc.errors import AuthError, FeatureLookupError, ProviderError, TransportError
from valoc.providers import (
    CachedChat,
    CachedEmbedder,
    ChatRequest,
    FeatureStore,
    MockVisualProvider,
    OpenAIChat,
    OpenAIEmbedder,
    ProviderConfig,
    ResponseCache,
    ScriptedChat,
    SimulatedChat,
    TransportFailure,
    cosine,
    mock_embedder_build,
    read_feature_file,
    write_feature_file,
)


def chat_config(**overrides):
    base = dict(
        base_url="http://llm.test/v1",
        api_key_env="ASK2LOC_CHAT_KEY",
        model_name="test-model",
        timeout_s=5.0,
        max_retries=3,
    )
    base.update(overrides)
    return ProviderConfig(**base)


class FakeTransport:
    """Scripted (status, payload) responses; raising entries simulate timeouts."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = 0
        self.seen = []

    def __call__(self, url, headers, body, timeout_s):
        self.calls += 1
        self.seen.append((url, headers, body))
        outcome = self.outcomes.pop(0)
        if outcome == "timeout":
            raise TransportFailure("simulated timeout")
        return outcome


def completion(text):
    return 200, {"choices": [{"message": {"content": text}}]}


class TestHttpChat:
    def test_success_passthrough(self):
        transport = FakeTransport([completion("hello back")])
        client = OpenAIChat(chat_config(), transport=transport, backoff_s=0)
        assert client.chat(ChatRequest(system="s", user="u")) == "hello back"
        url, headers, body = transport.seen[0]
        assert url.endswith("/chat/completions")
        assert body["messages"][0]["role"] == "system"

    def test_two_retryable_failures_then_success(self):
        transport = FakeTransport(["timeout", (503, {}), completion("ok")])
        client = OpenAIChat(chat_config(), transport=transport, backoff_s=0)
        assert client.chat(ChatRequest(system="s", user="u")) == "ok"
        assert client.last_retries == 2

    def test_exhausted_retries_is_transport_error(self):
        transport = FakeTransport(["timeout"] * 4)
        client = OpenAIChat(chat_config(max_retries=3), transport=transport, backoff_s=0)
        with pytest.raises(TransportError):
            client.chat(ChatRequest(system="s", user="u"))
        assert transport.calls == 4

    def test_auth_error_not_retried(self):
        transport = FakeTransport([(401, {})])
        client = OpenAIChat(chat_config(), transport=transport, backoff_s=0)
        with pytest.raises(AuthError):
            client.chat(ChatRequest(system="s", user="u"))
        assert transport.calls == 1

    def test_empty_completion_is_provider_error(self):
        transport = FakeTransport([completion("")])
        client = OpenAIChat(chat_config(), transport=transport, backoff_s=0)
        with pytest.raises(ProviderError, match="empty"):
            client.chat(ChatRequest(system="s", user="u"))

    def test_bearer_token_from_named_env_var(self, monkeypatch):
        monkeypatch.setenv("ASK2LOC_CHAT_KEY", "sekrit")
        transport = FakeTransport([completion("x")])
        client = OpenAIChat(chat_config(), transport=transport, backoff_s=0)
        client.chat(ChatRequest(system="s", user="u"))
        assert transport.seen[0][1]["Authorization"] == "Bearer sekrit"

    def test_config_invariants(self):
        with pytest.raises(ValueError):
            chat_config(max_retries=6)
        with pytest.raises(ValueError):
            chat_config(timeout_s=0)


class TestHttpEmbedder:
    def test_normalizes_and_checks_dim(self):
        transport = FakeTransport([(200, {"data": [{"embedding": [3.0, 4.0]}]})])
        client = OpenAIEmbedder(chat_config(), dim=2, transport=transport, backoff_s=0)
        vec = client.embed_text("hi")
        assert np.linalg.norm(vec.values) == pytest.approx(1.0, abs=1e-9)

    def test_dimension_mismatch(self):
        transport = FakeTransport([(200, {"data": [{"embedding": [1.0, 2.0, 3.0]}]})])
        client = OpenAIEmbedder(chat_config(), dim=2, transport=transport, backoff_s=0)
        with pytest.raises(ProviderError, match="dimension"):
            client.embed_text("hi")

    def test_empty_text_rejected_before_network(self):
        transport = FakeTransport([])
        client = OpenAIEmbedder(chat_config(), dim=2, transport=transport, backoff_s=0)
        with pytest.raises(ValueError):
            client.embed_text("   ")
        assert transport.calls == 0

    def test_long_text_truncated_not_rejected(self):
        transport = FakeTransport([(200, {"data": [{"embedding": [1.0, 0.0]}]})])
        client = OpenAIEmbedder(chat_config(), dim=2, transport=transport, backoff_s=0)
        client.embed_text("w" * 100_000)
        assert len(transport.seen[0][2]["input"]) <= 8000


class TestCache:
    def test_chat_cache_hit_makes_no_network_call(self, tmp_path):
        cache = ResponseCache(tmp_path)
        inner = ScriptedChat(["first"])
        cached = CachedChat(inner, cache)
        req = ChatRequest(system="s", user="u")
        assert cached.chat(req) == "first"
        assert cached.chat(req) == "first"  # would raise if it reached the script again
        assert inner.calls == 1
        assert (cached.calls_made, cached.calls_saved) == (1, 1)

    def test_cache_key_covers_model_and_temperature(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cached = CachedChat(ScriptedChat(["a", "b"]), cache)
        assert cached.chat(ChatRequest(system="s", user="u", temperature=0.0)) == "a"
        assert cached.chat(ChatRequest(system="s", user="u", temperature=0.7)) == "b"

    def test_cache_persists_across_instances(self, tmp_path):
        cache = ResponseCache(tmp_path)
        CachedChat(ScriptedChat(["answer"]), cache).chat(ChatRequest(system="s", user="u"))
        fresh_inner = ScriptedChat([])
        fresh = CachedChat(fresh_inner, ResponseCache(tmp_path))
        assert fresh.chat(ChatRequest(system="s", user="u")) == "answer"
        assert fresh_inner.calls == 0

    def test_embed_cache_round_trip_is_exact(self, tmp_path):
        cache = ResponseCache(tmp_path)
        inner = mock_embedder_build(0, 16)
        cached = CachedEmbedder(inner, cache)
        first = cached.embed_text("alpha beta")
        warm = CachedEmbedder(mock_embedder_build(0, 16), ResponseCache(tmp_path))
        second = warm.embed_text("alpha beta")
        assert warm.inner.calls == 0
        assert np.array_equal(first.values, second.values)


class TestMockEmbedder:
    def test_deterministic(self):
        e = mock_embedder_build(1, 16)
        a = e.embed_text("alpha beta gamma")
        b = e.embed_text("alpha beta gamma")
        assert np.array_equal(a.values, b.values)

    def test_identical_text_cosine_one(self):
        e = mock_embedder_build(1, 8)
        assert cosine(e.embed_text("a b"), e.embed_text("a b")) == pytest.approx(1.0)

    def test_token_overlap_monotonicity(self):
        e = mock_embedder_build(5, 32)
        anchor = e.embed_text("a b c d")
        near = cosine(anchor, e.embed_text("a b c x"))
        far = cosine(anchor, e.embed_text("w x y z"))
        assert near > far

    def test_unrelated_strings_cosine_strictly_inside_unit_interval(self):
        e = mock_embedder_build(9, 32)
        rng = random.Random(0)
        vocab = [f"tok{i}" for i in range(500)]
        for _ in range(100):
            left = " ".join(rng.sample(vocab, 5))
            right = " ".join(rng.sample(vocab, 5))
            if left == right:
                continue
            c = cosine(e.embed_text(left), e.embed_text(right))
            assert -1.0 < c < 1.0

    def test_seed_sensitivity(self):
        a = mock_embedder_build(1, 8).embed_text("same text")
        b = mock_embedder_build(2, 8).embed_text("same text")
        assert not np.allclose(a.values, b.values)

    def test_unit_norm_within_tolerance(self):
        e = mock_embedder_build(3, 24)
        for text in ("one", "one two", "x y z w"):
            assert abs(np.linalg.norm(e.embed_text(text).values) - 1.0) < 1e-6

    def test_empty_text_errors(self):
        with pytest.raises(ValueError):
            mock_embedder_build(0, 8).embed_text("   ")

    def test_dim_floor(self):
        with pytest.raises(ValueError):
            mock_embedder_build(0, 4)


class TestVisual:
    def test_mock_deterministic(self):
        p = MockVisualProvider(0, 16)
        a = p.visual_feature("v", 3)
        b = p.visual_feature("v", 3)
        assert np.array_equal(a.values, b.values)
        assert not np.allclose(a.values, p.visual_feature("v", 4).values)

    def test_store_codec_identity(self, tmp_path):
        rng = np.random.default_rng(0)
        feats = rng.standard_normal((4, 12)).astype(np.float32)
        path = tmp_path / "x.ivf"
        write_feature_file(path, feats)
        back = read_feature_file(path)
        assert back.dtype == np.float32
        assert np.array_equal(back, feats)

    def test_store_magic_layout(self, tmp_path):
        feats = np.zeros((2, 3), dtype=np.float32)
        path = tmp_path / "x.ivf"
        write_feature_file(path, feats)
        raw = path.read_bytes()
        assert raw[:8] == b"IVALVF01"
        assert int.from_bytes(raw[8:12], "little") == 2
        assert int.from_bytes(raw[12:16], "little") == 3
        assert len(raw) == 16 + 2 * 3 * 4

    def test_store_lookup_and_bounds(self, tmp_path):
        store = FeatureStore(tmp_path)
        store.put("vid", np.arange(12 * 4, dtype=np.float32).reshape(12, 4))
        vec = store.visual_feature("vid", 11)
        assert vec.dim == 4
        with pytest.raises(FeatureLookupError, match="segment 12"):
            store.visual_feature("vid", 12)
        with pytest.raises(FeatureLookupError, match="ghost"):
            store.visual_feature("ghost", 0)


class TestSimulatedChat:
    def test_further_question_is_yes_no_style(self):
        from valoc.interact import load_template, render_prompt

        chat = SimulatedChat(seed=0)
        req = render_prompt(
            load_template("further_question_en"),
            {"init_question": "How to swim?", "hist_dialogue": "", "description_spans": "[0] x"},
        )
        out = chat.chat(req)
        assert out.startswith("Do you mean")
        assert out.endswith("?")
        assert chat.chat(req) == out  # deterministic

    def test_yes_no_answers_are_binary(self):
        from valoc.interact import load_template, render_prompt

        chat = SimulatedChat(seed=0)
        seen = set()
        for i in range(8):
            req = render_prompt(
                load_template("yesno_answer_en"),
                {"question": f"Is it {i}?", "text": "[0] stuff"},
            )
            seen.add(chat.chat(req))
        assert seen <= {"yes", "no"}
        assert len(seen) == 2  # the hash actually varies

    def test_describe_echoes_subtitle_tokens(self):
        from valoc.interact import load_template, render_prompt

        chat = SimulatedChat(seed=0)
        req = render_prompt(
            load_template("subtitle_describe_en"),
            {"all_subtitles": "[0] press the swab", "subtitle": "press the swab"},
        )
        assert "press the swab" in chat.chat(req)
