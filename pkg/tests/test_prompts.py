"""Prompt templates are load-bearing: golden tests pin them byte by byte."""

import pytest

from tddloop.errors import FeatureValidationError
from tddloop.feature import FeatureInput, FeatureSpec
from tddloop.prompts import (
    INTERMEDIATE_PROMPT,
    REFACTOR_PROMPT,
    assemble_context,
    build_first_prompt,
    build_intermediate_prompt,
    build_refactor_prompt,
    build_retry_prompt,
)

TEXTFORMATTER_DESCRIPTION = (
    "Develop a class TextFormatter that takes arbitrary words and horizontally "
    "center them into a line. The class TextFormatter shall have three functions. "
    "The first is called setLineWidth and sets the length of the line. The second "
    "function receives a single word and returns the word in the center of the "
    "line. The third function receives two words and centers the two words in the line."
)


def textformatter_feature() -> FeatureSpec:
    return FeatureSpec(
        description=TEXTFORMATTER_DESCRIPTION,
        inputs=(FeatureInput("width", "10"), FeatureInput("word", "'ab'")),
        expected_outputs=("'    ab    '",),
        target_class_hint="TextFormatter",
    )


class TestFirstPrompt:
    def test_textformatter_prompt_opens_with_template(self):
        prompt = build_first_prompt(textformatter_feature())
        assert prompt.startswith(
            "Use the Assertion First pattern in TDD and stubs and drivers to develop "
            "the first barely minimal test and production code for the feature "
            "Develop a class TextFormatter"
        )

    def test_slots_filled_verbatim_in_order(self):
        feature = FeatureSpec(
            description="pad words",
            inputs=(FeatureInput("width", "10"),),
            expected_outputs=("'  ab  '",),
        )
        assert build_first_prompt(feature) == (
            "Use the Assertion First pattern in TDD and stubs and drivers to develop "
            "the first barely minimal test and production code for the feature "
            "pad words with input width and 10 and expected output '  ab  '"
        )

    def test_multiple_slots_join_with_comma_space(self):
        feature = FeatureSpec(
            description="d",
            inputs=(FeatureInput("a", "1"), FeatureInput("b", "2")),
            expected_outputs=("x", "y"),
        )
        prompt = build_first_prompt(feature)
        assert "with input a, b and 1, 2 and expected output x, y" in prompt

    def test_empty_description_is_rejected(self):
        with pytest.raises(FeatureValidationError):
            FeatureSpec(description="   ", inputs=(), expected_outputs=())

    def test_only_first_prompt_embeds_feature_content(self):
        feature = textformatter_feature()
        assert "TextFormatter" in build_first_prompt(feature)
        assert "TextFormatter" not in build_intermediate_prompt()
        assert "TextFormatter" not in build_refactor_prompt()


class TestConstantPrompts:
    def test_intermediate_prompt_exact(self):
        assert build_intermediate_prompt() == (
            "Keep the existing tests and run the next iteration of TDD to develop "
            "the barely minimal test and production code"
        )

    def test_intermediate_prompt_pure(self):
        assert build_intermediate_prompt() == build_intermediate_prompt() == INTERMEDIATE_PROMPT

    def test_intermediate_prompt_keeps_existing_tests_first(self):
        assert build_intermediate_prompt().startswith("Keep the existing tests")

    def test_refactor_prompt_exact(self):
        assert build_refactor_prompt() == "Refactor the code."

    def test_refactor_prompt_pure(self):
        assert build_refactor_prompt() == build_refactor_prompt() == REFACTOR_PROMPT

    def test_refactor_prompt_length(self):
        # Independent oracle: count the characters of the constant.
        assert len(build_refactor_prompt()) == 18


class TestContextAssembly:
    def test_first_iteration_has_only_the_prompt(self):
        context = assemble_context(None, "prompt")
        assert context.previous_reply is None
        assert context.turns == 1
        assert context.to_messages() == [{"role": "user", "content": "prompt"}]

    def test_reply_and_prompt_make_two_turns(self):
        context = assemble_context("previous reply", "next prompt")
        assert context.turns == 2
        assert context.to_messages() == [
            {"role": "assistant", "content": "previous reply"},
            {"role": "user", "content": "next prompt"},
        ]

    def test_chained_iterations_drop_older_replies(self):
        # Trace three iterations by hand: context 3 carries reply 2 only.
        c1 = assemble_context(None, "p1")
        r1 = "reply one"
        c2 = assemble_context(r1, "p2")
        r2 = "reply two"
        c3 = assemble_context(r2, "p3")
        assert c3.previous_reply == r2
        assert r1 not in (c3.previous_reply or "")
        assert all(c.turns <= 2 for c in (c1, c2, c3))

    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            assemble_context(None, "")

    def test_retry_prompt_appends_log_after_blank_line(self):
        assert build_retry_prompt("prompt", "the log") == "prompt\n\nthe log"
        assert build_retry_prompt("prompt", "") == "prompt"


def full_history_context(history: list[str], prompt: str) -> list[str]:
    """Reference implementation of the send-everything strategy (iii)."""
    return history + [prompt]


def test_previous_reply_strategy_stays_bounded_unlike_full_history():
    history: list[str] = []
    for step in range(1, 8):
        prompt = f"prompt {step}"
        bounded = assemble_context(history[-1] if history else None, prompt)
        unbounded = full_history_context(history, prompt)
        assert bounded.turns <= 2
        assert len(unbounded) == len(history) + 1
        history.append(prompt)
        history.append(f"reply {step}")
    assert len(full_history_context(history, "final")) > 2
