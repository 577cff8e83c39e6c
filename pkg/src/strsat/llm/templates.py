"""Prompt templates: external text files with named slots.

A template file is split into [role] / [task] / [example] / [feedback] /
[output] sections; the feedback section is rendered only when the
update_feedback slot is non-empty.  Every slot referenced by a section
must be filled at render time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

_SECTION = re.compile(r"^\[(role|task|example|feedback|output)\]\s*$")


class TemplateError(Exception):
    pass


class _StrictSlots(dict):
    def __missing__(self, key: str) -> str:
        raise TemplateError(f"unfilled prompt slot {{{key}}}")


@dataclass(frozen=True)
class PromptTemplate:
    kind: str
    role_description: str
    task_body: str
    one_shot_example: str | None = None
    update_feedback_block: str | None = None
    output_format_instructions: str = ""

    def render_messages(self, slots: dict[str, object]) -> tuple[str, str]:
        """Returns (system, user) message texts."""
        filled = _StrictSlots(slots)
        parts = [self.task_body.format_map(filled)]
        if self.one_shot_example:
            parts.append(self.one_shot_example.format_map(filled))
        if self.update_feedback_block and str(slots.get("update_feedback", "")):
            parts.append(self.update_feedback_block.format_map(filled))
        if self.output_format_instructions:
            parts.append(self.output_format_instructions.format_map(filled))
        return self.role_description.format_map(filled), "\n\n".join(parts)

    def render(self, slots: dict[str, object]) -> str:
        system, user = self.render_messages(slots)
        return system + "\n\n" + user


def _split_sections(text: str) -> dict[str, str]:
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in text.splitlines():
        m = _SECTION.match(line)
        if m:
            current = sections.setdefault(m.group(1), [])
        elif current is not None:
            current.append(line)
    return {name: "\n".join(lines).strip() for name, lines in sections.items()}


def template_from_text(kind: str, text: str) -> PromptTemplate:
    sections = _split_sections(text)
    if "task" not in sections:
        raise TemplateError(f"template {kind!r} lacks a [task] section")
    return PromptTemplate(
        kind=kind,
        role_description=sections.get("role", ""),
        task_body=sections["task"],
        one_shot_example=sections.get("example") or None,
        update_feedback_block=sections.get("feedback") or None,
        output_format_instructions=sections.get("output", ""),
    )


def load_template(kind: str) -> PromptTemplate:
    """Load a built-in template: lvo, checker_smt, or checker_script."""
    try:
        text = (
            resources.files("strsat.llm").joinpath(f"prompts/{kind}.txt").read_text("utf-8")
        )
    except FileNotFoundError:
        raise TemplateError(f"no built-in prompt template named {kind!r}")
    return template_from_text(kind, text)
