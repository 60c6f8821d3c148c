from .engine import (
    ChatSession,
    answer_question,
    ask_further_question,
    format_dialogue,
    normalize_yes_no,
    rewrite_question,
    rewrite_subtitle,
    rewrite_subtitles,
    run_chat,
    subtitles_blob,
)
from .templates import TEMPLATE_NAMES, PromptTemplate, load_template, render_prompt

__all__ = [
    "ChatSession",
    "answer_question",
    "ask_further_question",
    "format_dialogue",
    "normalize_yes_no",
    "rewrite_question",
    "rewrite_subtitle",
    "rewrite_subtitles",
    "run_chat",
    "subtitles_blob",
    "TEMPLATE_NAMES",
    "PromptTemplate",
    "load_template",
    "render_prompt",
]
