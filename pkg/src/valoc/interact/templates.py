"""Prompt templates and rendering.

Templates live as plain-text files next to this module, one ``.system.txt``
and one ``.user.txt`` per name, with ``{placeholder}`` slots.  The English
bodies are load-bearing: golden-file tests compare rendered output byte
for byte, so edit them only together with the goldens.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from ..errors import RenderError
from ..providers import ChatRequest

TEMPLATE_NAMES = (
    "further_question_en",
    "further_question_zh",
    "yesno_answer_en",
    "yesno_answer_zh",
    "dialogue_summary_en",
    "dialogue_summary_zh",
    "subtitle_describe_en",
    "subtitle_describe_zh",
)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system: str
    user_body: str


def _read(filename: str) -> str:
    text = resources.files(__package__).joinpath("templates", filename).read_text("utf-8")
    # tolerate a single editor-added trailing newline; bodies may end in a space
    return text[:-1] if text.endswith("\n") else text


@lru_cache(maxsize=None)
def load_template(name: str) -> PromptTemplate:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown template {name!r}")
    return PromptTemplate(
        name=name,
        system=_read(f"{name}.system.txt"),
        user_body=_read(f"{name}.user.txt"),
    )


class _StrictBindings(dict):
    def __missing__(self, key: str) -> str:
        raise RenderError(key)


def render_prompt(
    template: PromptTemplate,
    bindings: Mapping[str, str],
    temperature: float = 0.0,
    max_tokens: int = 512,
) -> ChatRequest:
    """Substitute placeholders; a missing binding raises naming it."""
    user = template.user_body.format_map(_StrictBindings(bindings))
    return ChatRequest(
        system=template.system, user=user, temperature=temperature, max_tokens=max_tokens
    )
