"""Shared helpers for the test suite: stubs, canonicalization, builders."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone

from tddloop.prompts import ConversationContext
from tddloop.provider import ProviderReply
from tddloop.session import (
    CodeArtifacts,
    IterationRecord,
    RunStatus,
    Session,
    SourceDocument,
    TestRunOutcome,
)

EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)

_TIME_RE = re.compile(r"\b(in|after) \d+(\.\d+)?s\b")


class ScriptedProvider:
    """Returns queued reply texts in order; repeats the last one when dry."""

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self.contexts: list[ConversationContext] = []

    def complete(self, context: ConversationContext) -> ProviderReply:
        self.contexts.append(context)
        index = min(len(self.contexts) - 1, len(self.replies) - 1)
        return ProviderReply(text=self.replies[index])


@dataclass
class ScriptedRunner:
    """Stands in for run_tests: pops pass/fail outcomes from a script."""

    script: list[bool]
    calls: int = 0

    def __call__(self, workspace, config=None) -> TestRunOutcome:
        passed = self.script[self.calls] if self.calls < len(self.script) else True
        self.calls += 1
        if passed:
            return TestRunOutcome(RunStatus.PASSED, 0, "1 test passed", 0.0)
        return TestRunOutcome(
            RunStatus.FAILED, 1, f"FAIL: run {self.calls} was scripted to fail", 0.0
        )


def reply_with_code(test_body: str | None, production_body: str | None, marker: str = "") -> str:
    """A chat-style reply embedding the given documents as fenced blocks."""
    parts = [f"Continuing the iteration. {marker}".strip()]
    if test_body is not None:
        parts.append(f"Here is the test code:\n\n```python\n{test_body}```")
    if production_body is not None:
        parts.append(f"And here is the production code:\n\n```python\n{production_body}```")
    return "\n\n".join(parts) + "\n"


def simple_test_doc(names: tuple[str, ...] = ("feature",)) -> str:
    lines = ["import unittest", "", "class TestFeature(unittest.TestCase):"]
    for name in names:
        lines += [f"    def test_{name}(self):", "        assert True"]
    return "\n".join(lines) + "\n"


def simple_production_doc() -> str:
    return "class Feature:\n    def run(self):\n        return 1\n"


def scrub_log(text: str) -> str:
    return _TIME_RE.sub(lambda m: f"{m.group(1)} Xs", text)


def canonical_record(record: IterationRecord) -> tuple:
    """Iteration state minus volatile fields (timestamps, durations, timings)."""
    return (
        record.index,
        record.phase.value,
        record.prompt_sent,
        record.raw_replies,
        record.attempts,
        record.artifacts_after.test.filename,
        record.artifacts_after.test.text,
        record.artifacts_after.production.filename,
        record.artifacts_after.production.text,
        record.outcome.status.value,
        record.outcome.exit_code,
        scrub_log(record.outcome.log),
        record.developer_edits,
        record.warnings,
    )


def canonical_session(session: Session) -> tuple:
    """Session state minus volatile identity (id, paths, wall-clock)."""
    return (
        session.pattern.value,
        session.status.value,
        session.feature,
        tuple(canonical_record(r) for r in session.iterations),
    )


def make_artifacts(test_text: str = "", production_text: str = "") -> CodeArtifacts:
    return CodeArtifacts(
        test=SourceDocument("test_feature.py", test_text),
        production=SourceDocument("feature.py", production_text),
    )


def make_outcome(passed: bool = True, log: str = "ok") -> TestRunOutcome:
    if passed:
        return TestRunOutcome(RunStatus.PASSED, 0, log, 0.01)
    return TestRunOutcome(RunStatus.FAILED, 1, log, 0.01)


def make_record(
    index: int,
    phase,
    attempts: int = 1,
    test_text: str = "def test_a():\n    assert True\n",
    passed: bool = True,
    warnings: tuple[str, ...] = (),
) -> IterationRecord:
    return IterationRecord(
        index=index,
        phase=phase,
        prompt_sent=f"prompt {index}",
        raw_replies=tuple(f"reply {index}.{a}" for a in range(1, attempts + 1)),
        attempts=attempts,
        artifacts_after=make_artifacts(test_text, "class Feature:\n    pass\n"),
        outcome=make_outcome(passed),
        started_at=EPOCH,
        finished_at=EPOCH,
        warnings=warnings,
    )
