"""Prompt construction and conversation-context assembly.

The context sent with every request carries at most the previous reply plus
the new prompt, never the full history: chaining the last output into the
next query is what keeps the model doing incremental steps.
"""

from __future__ import annotations

from dataclasses import dataclass

from .feature import FeatureSpec

FIRST_PROMPT_TEMPLATE = (
    "Use the Assertion First pattern in TDD and stubs and drivers to develop "
    "the first barely minimal test and production code for the feature "
    "{description} with input {names} and {values} and expected output {outputs}"
)

INTERMEDIATE_PROMPT = (
    "Keep the existing tests and run the next iteration of TDD to develop "
    "the barely minimal test and production code"
)

REFACTOR_PROMPT = "Refactor the code."

_SLOT_SEPARATOR = ", "


@dataclass(frozen=True)
class ConversationContext:
    """At most two turns: the previous reply (if any) and the new prompt."""

    new_prompt: str
    previous_reply: str | None = None

    def __post_init__(self):
        if not self.new_prompt:
            raise ValueError("a context needs a non-empty prompt")

    @property
    def turns(self) -> int:
        return 2 if self.previous_reply is not None else 1

    def to_messages(self) -> list[dict[str, str]]:
        messages = []
        if self.previous_reply is not None:
            messages.append({"role": "assistant", "content": self.previous_reply})
        messages.append({"role": "user", "content": self.new_prompt})
        return messages


def build_first_prompt(feature: FeatureSpec) -> str:
    """Fill the first-iteration template; slot text is used verbatim."""
    return FIRST_PROMPT_TEMPLATE.format(
        description=feature.description,
        names=_SLOT_SEPARATOR.join(i.name for i in feature.inputs),
        values=_SLOT_SEPARATOR.join(i.value for i in feature.inputs),
        outputs=_SLOT_SEPARATOR.join(feature.expected_outputs),
    )


def build_intermediate_prompt() -> str:
    return INTERMEDIATE_PROMPT


def build_refactor_prompt() -> str:
    return REFACTOR_PROMPT


def build_retry_prompt(prompt: str, execution_log: str) -> str:
    """Same prompt with the failing run's output appended after a blank line."""
    if not execution_log:
        return prompt
    return f"{prompt}\n\n{execution_log}"


def assemble_context(previous_reply: str | None, prompt: str) -> ConversationContext:
    return ConversationContext(new_prompt=prompt, previous_reply=previous_reply)
