"""Clarification dialogue and rewriting over a chat provider.

The dialogue loop alternates a questioning agent and an answering agent
(or a live human, via the service layer).  Answers are constrained to the
Boolean yes/no format; replies are normalized by their first token with
one re-ask before giving up.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import AnswerError, ProviderError, ValocError
from ..model import NO, YES, Dialogue, DialogueTurn, VideoSegment
from ..providers import ChatProvider, map_concurrent
from .templates import load_template, render_prompt

_PUNCT = ".,!?;:'\"“”‘’。，！？：；（）()"


def subtitles_blob(segments: list[VideoSegment] | tuple[VideoSegment, ...]) -> str:
    """All subtitles in one string with ``[i]`` index markers."""
    return " ".join(f"[{seg.seg_id}] {seg.subtitle}" for seg in segments)


def format_dialogue(dialogue: Dialogue) -> str:
    """Serialize turns as ``Q: ...`` / ``A: ...`` lines for prompting."""
    return "\n".join(f"Q: {t.question}\nA: {t.answer}" for t in dialogue.turns)


@dataclass
class ChatSession:
    """One in-flight clarification dialogue; round r equals turn count."""

    dialogue: Dialogue
    subtitles_blob: str
    answer_source: str = "agent"
    lang: str = "en"

    @property
    def round(self) -> int:
        return len(self.dialogue.turns)


def _lang_suffix(lang: str) -> str:
    if lang not in ("en", "zh"):
        raise ValueError(f"unsupported lang {lang!r}")
    return lang


def ask_further_question(
    session: ChatSession,
    provider: ChatProvider,
    rounds: int,
    description_spans: str | None = None,
) -> str:
    """Generate the next follow-up question (round r+1) without recording it."""
    if session.round >= rounds:
        raise ValueError(f"round cap reached ({session.round} of {rounds})")
    template = load_template(f"further_question_{_lang_suffix(session.lang)}")
    req = render_prompt(
        template,
        {
            "init_question": session.dialogue.initial_question,
            "hist_dialogue": format_dialogue(session.dialogue),
            "description_spans": description_spans
            if description_spans is not None
            else session.subtitles_blob,
        },
    )
    text = provider.chat(req).strip()
    if not text:
        raise ProviderError("empty completion for further question")
    return text


def normalize_yes_no(reply: str) -> str | None:
    token = reply.strip().split()[0] if reply.strip() else ""
    token = token.strip(_PUNCT)
    low = token.lower()
    if low == YES or token.startswith("是"):
        return YES
    if low == NO or token.startswith("否"):
        return NO
    return None


def answer_question(question: str, session: ChatSession, provider: ChatProvider) -> str:
    """Ask the answering agent; returns ``"yes"`` or ``"no"``."""
    if session.answer_source != "agent":
        raise ValueError("answer_question needs answer_source='agent'")
    template = load_template(f"yesno_answer_{_lang_suffix(session.lang)}")
    if session.lang == "zh":
        # the Chinese answerer conditions on the initial question only
        bindings = {"question": question, "init_question": session.dialogue.initial_question}
    else:
        bindings = {"question": question, "text": session.subtitles_blob}
    req = render_prompt(template, bindings)
    for _ in range(2):  # one re-ask on an unparseable reply
        reply = provider.chat(req)
        normalized = normalize_yes_no(reply)
        if normalized is not None:
            return normalized
    raise AnswerError(f"unparseable yes/no reply: {reply!r}")


def run_chat(
    question: str,
    segments: list[VideoSegment] | tuple[VideoSegment, ...],
    rounds: int,
    provider: ChatProvider,
    lang: str = "en",
    chatting: bool = True,
    description_spans: str | None = None,
) -> Dialogue:
    """Run the full clarification loop; exactly ``rounds`` turns on success.

    With ``chatting=False`` (or ``rounds=0``) returns a zero-turn dialogue
    and issues no provider calls.
    """
    dialogue = Dialogue(initial_question=question)
    if not chatting or rounds == 0:
        return dialogue
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not segments:
        raise ValueError("run_chat needs at least one segment")
    session = ChatSession(dialogue=dialogue, subtitles_blob=subtitles_blob(segments), lang=lang)
    for r in range(rounds):
        try:
            q = ask_further_question(session, provider, rounds, description_spans)
            a = answer_question(q, session, provider)
        except ValocError as e:
            raise e.__class__(f"round {r + 1}: {e}") from e
        session.dialogue = session.dialogue.with_turn(DialogueTurn(question=q, answer=a))
    return session.dialogue


def rewrite_question(
    dialogue: Dialogue,
    provider: ChatProvider,
    lang: str = "en",
    rewriting: bool = True,
) -> str:
    """Summarize the dialogue into a complete intent description."""
    if not rewriting:
        return dialogue.initial_question
    template = load_template(f"dialogue_summary_{_lang_suffix(lang)}")
    req = render_prompt(
        template,
        {"question": dialogue.initial_question, "dialogue": format_dialogue(dialogue)},
    )
    text = provider.chat(req).strip()
    if not text:
        raise ProviderError("empty completion for question rewrite")
    return text


def rewrite_subtitle(
    segment: VideoSegment,
    all_subtitles: str,
    provider: ChatProvider,
    lang: str = "en",
    rewriting: bool = True,
) -> str:
    """Rewrite one subtitle into a complete description of the segment."""
    if not segment.subtitle:
        raise ValueError(f"segment {segment.seg_id}: empty subtitle")
    if not rewriting:
        return segment.subtitle
    template = load_template(f"subtitle_describe_{_lang_suffix(lang)}")
    req = render_prompt(template, {"all_subtitles": all_subtitles, "subtitle": segment.subtitle})
    try:
        text = provider.chat(req).strip()
    except ValocError as e:
        raise e.__class__(f"segment {segment.seg_id}: {e}") from e
    if not text:
        raise ProviderError(f"segment {segment.seg_id}: empty completion for description")
    return text


def rewrite_subtitles(
    segments: list[VideoSegment] | tuple[VideoSegment, ...],
    provider: ChatProvider,
    lang: str = "en",
    rewriting: bool = True,
    max_workers: int = 4,
) -> list[str]:
    """Batch subtitle rewriting under the provider in-flight cap."""
    blob = subtitles_blob(segments)
    return map_concurrent(
        lambda seg: rewrite_subtitle(seg, blob, provider, lang, rewriting),
        segments,
        max_workers=max_workers,
    )
