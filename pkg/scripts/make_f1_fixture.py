#!/usr/bin/env python3
"""Regenerate the bundled demo fixtures.

Builds the TextFormatter feature file, the 8-exchange fully-automated replay
fixture (7 development iterations plus the refactor), and the 2-exchange
collaborative fixture with its decision script. Every test/production pair
is executed with the real unittest runner before the fixture is written, so
the bundled session is guaranteed to replay green end to end.

Run from the repository root:  python3 scripts/make_f1_fixture.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from tddloop.engine import (  # noqa: E402
    CollaborativeEngine,
    DecisionKind,
    DeveloperDecision,
    create_session,
    run_fully_automated,
)
from tddloop.feature import FeatureSpec, FeatureInput  # noqa: E402
from tddloop.harness import HarnessConfig, run_tests  # noqa: E402
from tddloop.integrator import write_workspace  # noqa: E402
from tddloop.provider import ProviderReply, RecordingProvider  # noqa: E402
from tddloop.session import (  # noqa: E402
    CodeArtifacts,
    InteractionPattern,
    RunStatus,
    SessionLog,
    SessionStatus,
    SourceDocument,
)

FIXTURES = REPO / "src" / "tddloop" / "fixtures"

FEATURE_DESCRIPTION = (
    "Develop a class TextFormatter that takes arbitrary words and horizontally "
    "center them into a line. The class TextFormatter shall have three functions. "
    "The first is called setLineWidth and sets the length of the line. The second "
    "function receives a single word and returns the word in the center of the "
    "line. The third function receives two words and centers the two words in the line."
)

FEATURE = FeatureSpec(
    description=FEATURE_DESCRIPTION,
    inputs=(FeatureInput("width", "10"), FeatureInput("word", "'ab'")),
    expected_outputs=("'    ab    '",),
    target_class_hint="TextFormatter",
    declared_functions=("setLineWidth", "centerWord", "centerTwoWords"),
)

TEST_HEAD = """\
import unittest
from text_formatter import TextFormatter

class TestTextFormatter(unittest.TestCase):
    def test_text_formatter(self):
        formatter = TextFormatter()
        formatter.setLineWidth(10)
"""

TEST_TAIL = """\

if __name__ == "__main__":
    unittest.main()
"""

# Assertion lines are accumulated one iteration at a time; the single test
# method grows until the refactor consolidates it.
TEST_STEP_LINES = [
    ['        assert formatter.line_width == 10'],
    ['        assert formatter.centerWord("ab") == "    ab    "'],
    ['        assert formatter.centerWord("abc") == "   abc    "'],
    ['        assert formatter.centerWord("") == "          "'],
    [
        "        formatter.setLineWidth(12)",
        '        assert formatter.centerWord("word") == "    word    "',
    ],
    ['        assert formatter.centerWord("formatter") == " formatter  "'],
    [
        "        formatter.setLineWidth(10)",
        '        assert formatter.centerTwoWords("ab", "cd") == "  ab cd   "',
    ],
]

PRODUCTION_V1 = """\
class TextFormatter:
    def __init__(self):
        self.line_width = 0

    def setLineWidth(self, width):
        self.line_width = width
"""

PRODUCTION_V2 = """\
class TextFormatter:
    def __init__(self):
        self.line_width = 0

    def setLineWidth(self, width):
        self.line_width = width

    def centerWord(self, word):
        padding = self.line_width - len(word)
        left = padding // 2
        right = padding - left
        return " " * left + word + " " * right
"""

PRODUCTION_V3 = """\
class TextFormatter:
    def __init__(self):
        self.line_width = 0

    def setLineWidth(self, width):
        self.line_width = width

    def centerWord(self, word):
        padding = self.line_width - len(word)
        left = padding // 2
        right = padding - left
        return " " * left + word + " " * right

    def centerTwoWords(self, first, second):
        combined = first + " " + second
        return self.centerWord(combined)
"""

FINAL_TEST = """\
import unittest
from text_formatter import TextFormatter

class TestTextFormatter(unittest.TestCase):
    def test_text_formatter(self):
        formatter = TextFormatter()
        formatter.setLineWidth(10)
        assert formatter.centerWord("ab") == "    ab    "
        # An odd gap leaves the extra space on the right.
        assert formatter.centerWord("abc") == "   abc    "
        # Two words are centered together as one pair.
        pair = formatter.centerTwoWords("ab", "cd")
        assert pair == "  ab cd   "

if __name__ == "__main__":
    unittest.main()
"""

FINAL_PRODUCTION = '''\
"""Production code for the TextFormatter feature."""

class TextFormatter:
    """Formats words centered on a fixed-width line."""

    def __init__(self):
        self.line_width = 0

    def setLineWidth(self, width):
        if width < 0:
            raise ValueError("line width must be >= 0")
        self.line_width = width

    def centerWord(self, word):
        padding = self.line_width - len(word)
        left = padding // 2
        right = padding - left
        return " " * left + word + " " * right

    def centerTwoWords(self, first, second):
        combined = first + " " + second
        return self.centerWord(combined)
'''


def test_document(up_to_step: int) -> str:
    lines = []
    for step in TEST_STEP_LINES[:up_to_step]:
        lines.extend(step)
    return TEST_HEAD + "\n".join(lines) + "\n" + TEST_TAIL


def reply_with_both(intro: str, test_doc: str, production_doc: str, outro: str) -> str:
    return (
        f"{intro}\n\nHere is the test code:\n\n```python\n{test_doc}```\n\n"
        f"And here is the production code:\n\n```python\n{production_doc}```\n\n{outro}\n"
    )


def reply_test_only(intro: str, test_doc: str) -> str:
    return (
        f"{intro}\n\nHere is the updated test code:\n\n```python\n{test_doc}```\n\n"
        "The existing production code already satisfies this assertion, so it is unchanged.\n"
    )


def build_f1_replies() -> list[str]:
    replies = [
        reply_with_both(
            "Using the Assertion First pattern, we start with the smallest possible "
            "test and just enough production code to make it pass.",
            test_document(1),
            PRODUCTION_V1,
            "Run the suite to confirm the first iteration is green.",
        ),
        reply_with_both(
            "Keeping the existing tests, the next iteration adds centering for a "
            "single word on an even line.",
            test_document(2),
            PRODUCTION_V2,
            "The new assertion should pass with this minimal implementation.",
        ),
        reply_test_only(
            "Keeping the existing tests, this iteration covers a word that leaves "
            "an odd gap on the line.",
            test_document(3),
        ),
        reply_test_only(
            "Keeping the existing tests, this iteration covers the empty word.",
            test_document(4),
        ),
        reply_test_only(
            "Keeping the existing tests, this iteration changes the line width "
            "between calls.",
            test_document(5),
        ),
        reply_test_only(
            "Keeping the existing tests, this iteration centers a longer word on "
            "the wider line.",
            test_document(6),
        ),
        reply_with_both(
            "Keeping the existing tests, this iteration introduces centering of "
            "two words as a pair.",
            test_document(7),
            PRODUCTION_V3,
            "All assertions should pass now.",
        ),
        (
            "Refactoring the code while keeping the behavior identical. The suite is "
            "consolidated around the three behaviors and the production class gains "
            "documentation and input validation.\n\n"
            "Here is the refactored test code:\n\n"
            f"```python\n{FINAL_TEST}```\n\n"
            "And here is the refactored production code:\n\n"
            f"```python\n{FINAL_PRODUCTION}```\n\n"
            "Everything still passes after the refactoring.\n"
        ),
    ]
    return replies


DEV_TEST = """\
import unittest
from text_formatter import TextFormatter

class TestTextFormatter(unittest.TestCase):
    def test_center_word(self):
        formatter = TextFormatter()
        formatter.setLineWidth(10)
        assert formatter.centerWord("ab") == "    ab    "

if __name__ == "__main__":
    unittest.main()
"""

COLLAB_PRODUCTION_V1 = PRODUCTION_V2

COLLAB_PRODUCTION_V2 = '''\
"""Production code for the TextFormatter feature."""

class TextFormatter:
    """Centers words on a fixed-width line."""

    def __init__(self):
        self.line_width = 0

    def setLineWidth(self, width):
        self.line_width = width

    def centerWord(self, word):
        padding = self.line_width - len(word)
        left = padding // 2
        right = padding - left
        return " " * left + word + " " * right
'''


def build_collab_replies() -> list[str]:
    return [
        (
            "I will provide the production code for your test.\n\n"
            "Here is the production code:\n\n"
            f"```python\n{COLLAB_PRODUCTION_V1}```\n\n"
            "Your assertion should pass now.\n"
        ),
        (
            "Here is the refactored production code:\n\n"
            f"```python\n{COLLAB_PRODUCTION_V2}```\n\n"
            "The behavior is unchanged.\n"
        ),
    ]


def verify_pair(test_doc: str, production_doc: str, label: str) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        artifacts = CodeArtifacts(
            test=SourceDocument("test_text_formatter.py", test_doc),
            production=SourceDocument("text_formatter.py", production_doc),
        )
        write_workspace(tmp, artifacts)
        outcome = run_tests(tmp, HarnessConfig())
        if outcome.status is not RunStatus.PASSED:
            raise SystemExit(f"{label}: tests do not pass\n{outcome.log}")


class ScriptedReplies:
    """Ignores context and returns the queued replies in order."""

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, context) -> ProviderReply:
        reply = self.replies[self.calls]
        self.calls += 1
        return ProviderReply(text=reply)


def record_f1_session(replies: list[str]) -> str:
    """Run the fully-automated engine over scripted replies, record contexts."""
    recorder = RecordingProvider(ScriptedReplies(replies))
    with tempfile.TemporaryDirectory() as tmp:
        log = SessionLog(Path(tmp) / "session.log")
        session = create_session(
            FEATURE, InteractionPattern.FULLY_AUTOMATED, Path(tmp) / "ws", log
        )
        session = run_fully_automated(session, recorder, log)
        if session.status is not SessionStatus.COMPLETED:
            raise SystemExit(f"f1 recording did not complete: {session.status}")
        if len(session.iterations) != 8:
            raise SystemExit(f"f1 recording took {len(session.iterations)} iterations, not 8")
    return recorder.document()


def record_collab_session(replies: list[str], script: list[dict]) -> str:
    """Drive the collaborative engine with the decision script, record contexts."""
    recorder = RecordingProvider(ScriptedReplies(replies))
    with tempfile.TemporaryDirectory() as tmp:
        log = SessionLog(Path(tmp) / "session.log")
        session = create_session(
            FEATURE, InteractionPattern.COLLABORATIVE, Path(tmp) / "ws", log
        )
        engine = CollaborativeEngine(session, recorder, log)
        for entry in script:
            engine.submit(
                DeveloperDecision(
                    kind=DecisionKind(entry["kind"]),
                    test_source=entry.get("test_source"),
                    production_source=entry.get("production_source"),
                    prompt=entry.get("prompt"),
                    note=entry.get("note"),
                )
            )
        if session.status is not SessionStatus.COMPLETED:
            raise SystemExit(f"collab recording did not complete: {session.status}")
    return recorder.document()


def feature_toml() -> str:
    inputs = "\n".join(
        f'[[inputs]]\nname = "{i.name}"\nvalue = "{i.value}"\n' for i in FEATURE.inputs
    )
    outputs = ", ".join(json.dumps(o) for o in FEATURE.expected_outputs)
    functions = ", ".join(json.dumps(f) for f in FEATURE.declared_functions)
    return (
        f"description = {json.dumps(FEATURE.description)}\n"
        f'target_class_hint = "TextFormatter"\n'
        f"declared_functions = [{functions}]\n"
        f"expected_outputs = [{outputs}]\n\n"
        f"{inputs}"
    )


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    # Verify every iteration state actually passes before recording anything.
    production_per_step = [
        PRODUCTION_V1, PRODUCTION_V2, PRODUCTION_V2, PRODUCTION_V2,
        PRODUCTION_V2, PRODUCTION_V2, PRODUCTION_V3,
    ]
    for step, production in enumerate(production_per_step, start=1):
        verify_pair(test_document(step), production, f"f1 iteration {step}")
    verify_pair(FINAL_TEST, FINAL_PRODUCTION, "f1 refactor")
    verify_pair(DEV_TEST, COLLAB_PRODUCTION_V1, "collab iteration 1")
    verify_pair(DEV_TEST, COLLAB_PRODUCTION_V2, "collab refactor")

    # Record both fixtures through the real engine so the stored contexts
    # always match what a live run would send.
    (FIXTURES / "f1_fixture.jsonl").write_text(
        record_f1_session(build_f1_replies()), encoding="utf-8"
    )

    script = [
        {
            "kind": "edit-then-approve",
            "test_source": DEV_TEST,
            "note": "first test for centerWord",
        },
        {"kind": "declare-feature-complete"},
    ]
    (FIXTURES / "collab_fixture.jsonl").write_text(
        record_collab_session(build_collab_replies(), script), encoding="utf-8"
    )
    (FIXTURES / "collab_script.json").write_text(
        json.dumps(script, indent=2) + "\n", encoding="utf-8"
    )

    (FIXTURES / "f1_feature.toml").write_text(feature_toml(), encoding="utf-8")
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
