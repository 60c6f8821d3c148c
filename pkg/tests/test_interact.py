from pathlib import Path

import pytest

from valoc.errors import AnswerError, ProviderError, RenderError
from valoc.interact import (
    ChatSession,
    answer_question,
    ask_further_question,
    format_dialogue,
    load_template,
    normalize_yes_no,
    render_prompt,
    rewrite_question,
    rewrite_subtitle,
    rewrite_subtitles,
    run_chat,
    subtitles_blob,
)
from valoc.model import Dialogue, DialogueTurn
from valoc.providers import CachedChat, ChatRequest, ResponseCache, ScriptedChat, SimulatedChat

from conftest import make_segments

GOLDEN_DIR = Path(__file__).parent / "golden"

GOLDEN_BINDINGS = {
    "further_question_en": {
        "init_question": "How do I sanitize the wound?",
        "hist_dialogue": "Q: Do you mean the left arm?\nA: yes",
        "description_spans": "[0] clean hands [1] apply pressure",
    },
    "yesno_answer_en": {
        "question": "Do you mean the left arm?",
        "text": "[0] clean hands [1] apply pressure",
    },
    "dialogue_summary_en": {
        "question": "How do I sanitize the wound?",
        "dialogue": "Q: Do you mean the left arm?\nA: yes",
    },
    "subtitle_describe_en": {
        "all_subtitles": "[0] clean hands [1] apply pressure",
        "subtitle": "apply pressure",
    },
}


def session(turns=(), lang="en"):
    segs = make_segments([(0, 5), (5, 5), (10, 5)])
    return ChatSession(
        dialogue=Dialogue("How to X?", tuple(turns)),
        subtitles_blob=subtitles_blob(segs),
        lang=lang,
    )


class TestRender:
    @pytest.mark.parametrize("name", sorted(GOLDEN_BINDINGS))
    def test_rendered_english_templates_byte_match_goldens(self, name):
        req = render_prompt(load_template(name), GOLDEN_BINDINGS[name])
        golden = (GOLDEN_DIR / f"{name}.rendered.txt").read_bytes()
        assert req.user.encode("utf-8") == golden

    def test_render_contains_initial_question_marker(self):
        req = render_prompt(
            load_template("further_question_en"),
            {"init_question": "How to X?", "hist_dialogue": "", "description_spans": "d"},
        )
        assert "INITIAL_QUESTION: How to X?" in req.user

    def test_summary_ends_with_intent_probe(self):
        req = render_prompt(
            load_template("dialogue_summary_en"), {"question": "q", "dialogue": "d"}
        )
        assert req.user.endswith("what the user really want to ask?")

    def test_questioner_anchor_phrase_present(self):
        body = load_template("further_question_en").user_body
        assert 'start with "Do you mean ..."' in body

    def test_missing_binding_names_placeholder(self):
        with pytest.raises(RenderError, match="hist_dialogue"):
            render_prompt(
                load_template("further_question_en"),
                {"init_question": "q", "description_spans": "d"},
            )

    def test_zh_templates_render(self):
        req = render_prompt(
            load_template("further_question_zh"),
            {"init_question": "怎么做？", "hist_dialogue": "", "description_spans": "x"},
        )
        assert "初始问题：怎么做？" in req.user
        assert "{" not in req.user

    def test_system_prompt_taken_from_template(self):
        req = render_prompt(
            load_template("yesno_answer_en"), {"question": "q", "text": "t"}
        )
        assert req.system.startswith("You are an AI assistant to answer a yes-or-no question")


class TestNormalize:
    @pytest.mark.parametrize(
        "reply,expected",
        [
            ("Yes.", "yes"),
            ("YES", "yes"),
            ("no, that is not it", "no"),
            ("No!", "no"),
            ("是的。", "yes"),
            ("否，不是这样", "no"),
            ("maybe", None),
            ("", None),
            ("yesterday it rained", None),
        ],
    )
    def test_first_token_rule(self, reply, expected):
        assert normalize_yes_no(reply) == expected


class TestAskAnswer:
    def test_ask_returns_script_output(self):
        provider = ScriptedChat(["Do you mean the left arm?"])
        q = ask_further_question(session(), provider, rounds=3)
        assert q == "Do you mean the left arm?"

    def test_ask_at_round_cap_is_precondition_error(self):
        s = session(turns=[DialogueTurn("q?", "yes")] * 3)
        with pytest.raises(ValueError, match="round cap"):
            ask_further_question(s, ScriptedChat(["x"]), rounds=3)

    def test_prompt_serializes_prior_turns(self):
        provider = ScriptedChat(["next?"])
        s = session(turns=[DialogueTurn("Was it A?", "yes"), DialogueTurn("Was it B?", "no")])
        ask_further_question(s, provider, rounds=3)
        sent = provider.requests[0].user
        assert "Q: Was it A?\nA: yes" in sent
        assert "Q: Was it B?\nA: no" in sent

    def test_answer_normalization_and_reask(self):
        assert answer_question("q?", session(), ScriptedChat(["Yes."])) == "yes"
        # one re-ask repairs a bad first reply
        assert answer_question("q?", session(), ScriptedChat(["maybe", "no"])) == "no"

    def test_answer_unparseable_twice_errors(self):
        with pytest.raises(AnswerError):
            answer_question("q?", session(), ScriptedChat(["maybe", "dunno"]))

    def test_answerer_sees_full_subtitles_in_english(self):
        provider = ScriptedChat(["yes"])
        s = session()
        answer_question("q?", s, provider)
        assert s.subtitles_blob in provider.requests[0].user

    def test_zh_answerer_conditions_on_initial_question(self):
        provider = ScriptedChat(["是"])
        s = session(lang="zh")
        assert answer_question("进一步的问题？", s, provider) == "yes"
        sent = provider.requests[0].user
        assert "参考的初始问题：How to X?" in sent
        assert s.subtitles_blob not in sent


class TestRunChat:
    def test_three_rounds_in_script_order(self):
        provider = ScriptedChat(["Q1?", "yes", "Q2?", "no", "Q3?", "yes"])
        segs = make_segments([(0, 5), (5, 5)])
        d = run_chat("How to X?", segs, 3, provider)
        assert [t.question for t in d.turns] == ["Q1?", "Q2?", "Q3?"]
        assert [t.answer for t in d.turns] == ["yes", "no", "yes"]

    def test_single_round(self):
        provider = ScriptedChat(["Q1?", "no"])
        d = run_chat("q", make_segments([(0, 5)]), 1, provider)
        assert len(d.turns) == 1

    def test_chatting_disabled_makes_no_calls(self):
        provider = ScriptedChat([])
        d = run_chat("q", make_segments([(0, 5)]), 3, provider, chatting=False)
        assert d.turns == ()
        assert provider.calls == 0

    def test_provider_failure_carries_round_index(self):
        provider = ScriptedChat(["Q1?", "yes", "Q2?"])  # answer for round 2 missing
        with pytest.raises(ProviderError, match="round 2"):
            run_chat("q", make_segments([(0, 5)]), 3, provider)

    def test_simulated_chat_runs_full_dialogue(self):
        d = run_chat("How to bandage?", make_segments([(0, 5), (5, 5)]), 3, SimulatedChat(0))
        assert len(d.turns) == 3
        assert all(t.answer in ("yes", "no") for t in d.turns)
        assert all(t.question.startswith("Do you mean") for t in d.turns)


class TestRewrite:
    def test_question_rewrite_echoes_provider(self):
        provider = ScriptedChat(["The user wants the left arm procedure."])
        d = Dialogue("q", (DialogueTurn("a?", "yes"),))
        assert rewrite_question(d, provider) == "The user wants the left arm procedure."

    def test_question_rewrite_disabled_returns_initial(self):
        d = Dialogue("original question", (DialogueTurn("a?", "yes"),))
        provider = ScriptedChat([])
        assert rewrite_question(d, provider, rewriting=False) == "original question"
        assert provider.calls == 0

    def test_rewrite_prompt_contains_every_turn(self):
        provider = ScriptedChat(["ok"])
        d = Dialogue("q", (DialogueTurn("first?", "yes"), DialogueTurn("second?", "no")))
        rewrite_question(d, provider)
        sent = provider.requests[0].user
        assert "first?" in sent and "second?" in sent

    def test_subtitle_rewrite_stored_and_disabled_path(self):
        segs = make_segments([(0, 5)])
        provider = ScriptedChat(["The nurse sanitizes hands."])
        out = rewrite_subtitle(segs[0], "blob", provider)
        assert out == "The nurse sanitizes hands."
        provider = ScriptedChat([])
        assert rewrite_subtitle(segs[0], "blob", provider, rewriting=False) == segs[0].subtitle
        assert provider.calls == 0

    def test_batch_rewrites_hit_cache_on_second_pass(self, tmp_path):
        segs = make_segments([(i * 5, 5) for i in range(12)])
        cache = ResponseCache(tmp_path)
        cold = CachedChat(SimulatedChat(0), cache)
        rewrite_subtitles(segs, cold)
        assert cold.calls_made == 12
        warm = CachedChat(SimulatedChat(0), ResponseCache(tmp_path))
        rewrite_subtitles(segs, warm)
        assert warm.calls_made == 0
        assert warm.calls_saved == 12

    def test_subtitle_rewrite_error_names_segment(self):
        segs = make_segments([(0, 5)])
        with pytest.raises(ProviderError, match="segment 0"):
            rewrite_subtitle(segs[0], "blob", ScriptedChat([]))


def test_blob_uses_index_markers():
    segs = make_segments([(0, 5), (5, 5)])
    assert subtitles_blob(segs) == "[0] segment text 0 [1] segment text 1"


def test_format_dialogue_lines():
    d = Dialogue("q", (DialogueTurn("a?", "yes"), DialogueTurn("b?", "no")))
    assert format_dialogue(d) == "Q: a?\nA: yes\nQ: b?\nA: no"
