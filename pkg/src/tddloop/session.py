"""Session domain types and the append-only session log.

Every run of the tool produces exactly one log file: newline-delimited JSON
records, UTF-8, one self-describing record per workflow event. The log is the
authoritative store; a ``Session`` object is always reconstructible from it
(``load_session``), and appending never rewrites earlier bytes.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .errors import SequencingError, SessionLogError
from .feature import FeatureSpec, default_filenames

MAX_ATTEMPTS = 5

# Event kinds, one per record in the session log.
EVENT_SESSION_CREATED = "session-created"
EVENT_ITERATION_STARTED = "iteration-started"
EVENT_PROMPT_SENT = "prompt-sent"
EVENT_REPLY_RECEIVED = "reply-received"
EVENT_INTEGRATED = "integrated"
EVENT_TESTS_RUN = "tests-run"
EVENT_ATTEMPT_EXHAUSTED = "attempt-exhausted"
EVENT_DECISION_REQUESTED = "decision-requested"
EVENT_DECISION_RECEIVED = "decision-received"
EVENT_PHASE_ADVANCED = "phase-advanced"
EVENT_ITERATION_FINISHED = "iteration-finished"
EVENT_SESSION_COMPLETED = "session-completed"
EVENT_SESSION_HALTED = "session-halted"


def now_utc() -> datetime:
    return datetime.now(timezone.utc)


class InteractionPattern(str, Enum):
    COLLABORATIVE = "collaborative"
    FULLY_AUTOMATED = "fully-automated"
    NON_AUTOMATED = "non-automated"


class IterationPhase(str, Enum):
    FIRST = "first"
    INTERMEDIATE = "intermediate"
    REFACTOR = "refactor"


class SessionStatus(str, Enum):
    RUNNING = "running"
    AWAITING_DEVELOPER = "awaiting-developer"
    COMPLETED = "completed"
    HALTED = "halted"


class RunStatus(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SourceDocument:
    """One workspace artifact: a logical filename plus its full text."""

    filename: str
    text: str = ""

    @property
    def lines(self) -> list[str]:
        return self.text.splitlines()

    def to_dict(self) -> dict[str, Any]:
        return {"filename": self.filename, "text": self.text}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SourceDocument":
        return cls(filename=data["filename"], text=data["text"])


@dataclass(frozen=True)
class CodeArtifacts:
    """The two documents a session grows: the test and the production code."""

    test: SourceDocument
    production: SourceDocument

    def with_test(self, text: str) -> "CodeArtifacts":
        return CodeArtifacts(SourceDocument(self.test.filename, text), self.production)

    def with_production(self, text: str) -> "CodeArtifacts":
        return CodeArtifacts(self.test, SourceDocument(self.production.filename, text))

    def to_dict(self) -> dict[str, Any]:
        return {"test": self.test.to_dict(), "production": self.production.to_dict()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CodeArtifacts":
        return cls(
            test=SourceDocument.from_dict(data["test"]),
            production=SourceDocument.from_dict(data["production"]),
        )


def initial_artifacts(
    feature: FeatureSpec,
    test_filename: str | None = None,
    production_filename: str | None = None,
) -> CodeArtifacts:
    """Empty test/production documents named after the feature's class hint."""
    default_test, default_production = default_filenames(feature)
    return CodeArtifacts(
        test=SourceDocument(test_filename or default_test),
        production=SourceDocument(production_filename or default_production),
    )


@dataclass(frozen=True)
class TestRunOutcome:
    """Classification of one test-suite run plus its captured output."""

    __test__ = False  # keep pytest from collecting this as a test class

    status: RunStatus
    exit_code: int
    log: str
    duration_seconds: float

    def __post_init__(self):
        if (self.status is RunStatus.PASSED) != (self.exit_code == 0):
            raise ValueError("status is Passed exactly when the exit code is 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "exit_code": self.exit_code,
            "log": self.log,
            "duration_seconds": self.duration_seconds,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TestRunOutcome":
        return cls(
            status=RunStatus(data["status"]),
            exit_code=data["exit_code"],
            log=data["log"],
            duration_seconds=data["duration_seconds"],
        )


@dataclass(frozen=True)
class IterationRecord:
    """One completed TDD iteration: prompt, replies, artifacts, outcome."""

    index: int
    phase: IterationPhase
    prompt_sent: str
    raw_replies: tuple[str, ...]
    attempts: int
    artifacts_after: CodeArtifacts
    outcome: TestRunOutcome
    started_at: datetime
    finished_at: datetime
    developer_edits: str | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("iteration index starts at 1")
        if not 1 <= self.attempts <= MAX_ATTEMPTS:
            raise ValueError(f"attempts must be between 1 and {MAX_ATTEMPTS}")
        if len(self.raw_replies) != self.attempts:
            raise ValueError("one raw reply per attempt is required")

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "phase": self.phase.value,
            "prompt_sent": self.prompt_sent,
            "raw_replies": list(self.raw_replies),
            "attempts": self.attempts,
            "artifacts_after": self.artifacts_after.to_dict(),
            "outcome": self.outcome.to_dict(),
            "started_at": self.started_at.isoformat(),
            "finished_at": self.finished_at.isoformat(),
            "developer_edits": self.developer_edits,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "IterationRecord":
        return cls(
            index=data["index"],
            phase=IterationPhase(data["phase"]),
            prompt_sent=data["prompt_sent"],
            raw_replies=tuple(data["raw_replies"]),
            attempts=data["attempts"],
            artifacts_after=CodeArtifacts.from_dict(data["artifacts_after"]),
            outcome=TestRunOutcome.from_dict(data["outcome"]),
            started_at=datetime.fromisoformat(data["started_at"]),
            finished_at=datetime.fromisoformat(data["finished_at"]),
            developer_edits=data.get("developer_edits"),
            warnings=tuple(data.get("warnings", [])),
        )


@dataclass
class Session:
    """Full state of one TDD run, derived from its event log."""

    id: str
    feature: FeatureSpec
    pattern: InteractionPattern
    workspace_path: Path
    created_at: datetime
    iterations: list[IterationRecord] = field(default_factory=list)
    status: SessionStatus = SessionStatus.RUNNING

    def __post_init__(self):
        self._check_status()

    def _check_status(self):
        if (
            self.status is SessionStatus.AWAITING_DEVELOPER
            and self.pattern is not InteractionPattern.COLLABORATIVE
        ):
            raise ValueError("only collaborative sessions await the developer")
        if self.status is SessionStatus.COMPLETED:
            if not self.iterations or self.iterations[-1].phase is not IterationPhase.REFACTOR:
                raise ValueError("a completed session ends with the refactor iteration")

    def set_status(self, status: SessionStatus) -> None:
        self.status = status
        self._check_status()

    @property
    def last_artifacts(self) -> CodeArtifacts | None:
        return self.iterations[-1].artifacts_after if self.iterations else None


def new_session(
    feature: FeatureSpec,
    pattern: InteractionPattern,
    workspace_path: str | Path,
    session_id: str | None = None,
    created_at: datetime | None = None,
) -> Session:
    return Session(
        id=session_id or uuid.uuid4().hex,
        feature=feature,
        pattern=pattern,
        workspace_path=Path(workspace_path),
        created_at=created_at or now_utc(),
    )


@dataclass(frozen=True)
class LogEvent:
    """One session-log record: kind, UTC ISO-8601 timestamp, payload."""

    kind: str
    at: str
    data: dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {"event": self.kind, "at": self.at, "data": self.data}, ensure_ascii=False
        )


def make_event(kind: str, data: dict[str, Any], at: datetime | None = None) -> LogEvent:
    return LogEvent(kind=kind, at=(at or now_utc()).isoformat(), data=data)


class SessionLog:
    """Append-only, newline-delimited event log for one session.

    Each append opens, writes, and closes the file so a crash never loses
    more than the record being written.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, event: LogEvent) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(event.to_json() + "\n")

    def exists(self) -> bool:
        return self.path.exists()

    def read_lines(self) -> list[str]:
        with open(self.path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()

    def repair_tail(self) -> bool:
        """Drop an unterminated final record left behind by a crash.

        A record is only durable once its newline hit the disk; a partial
        tail would corrupt the next append. Returns True when bytes were
        dropped. The dropped step is re-executed on resume.
        """
        if not self.path.exists():
            return False
        data = self.path.read_bytes()
        if not data or data.endswith(b"\n"):
            return False
        keep = data.rfind(b"\n") + 1  # 0 when no newline at all
        with open(self.path, "r+b") as fh:
            fh.truncate(keep)
        return True


@dataclass
class LogParseResult:
    """Parsed log events plus whether a truncated final entry was dropped."""

    events: list[LogEvent]
    truncated: bool = False
    truncated_line_no: int | None = None


def _parse_line(line: str, line_no: int) -> LogEvent:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SessionLogError(f"line {line_no}: not valid JSON: {exc}", line_no) from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("event"), str):
        raise SessionLogError(f"line {line_no}: record lacks an 'event' field", line_no)
    data = raw.get("data")
    if not isinstance(data, dict):
        raise SessionLogError(f"line {line_no}: record lacks a 'data' object", line_no)
    return LogEvent(kind=raw["event"], at=str(raw.get("at", "")), data=data)


def parse_log_lines(lines: Iterable[str]) -> LogParseResult:
    """Parse log lines; a malformed final entry is dropped and flagged.

    A malformed entry anywhere else raises SessionLogError naming the line.
    """
    material = [(no, line) for no, line in enumerate(lines, start=1) if line.strip()]
    events: list[LogEvent] = []
    for position, (line_no, line) in enumerate(material):
        try:
            events.append(_parse_line(line, line_no))
        except SessionLogError:
            if position == len(material) - 1:
                return LogParseResult(events, truncated=True, truncated_line_no=line_no)
            raise
    return LogParseResult(events)


def fold_events(events: list[LogEvent]) -> Session:
    """Rebuild a Session from its event sequence."""
    if not events or events[0].kind != EVENT_SESSION_CREATED:
        raise SessionLogError("log must begin with a session-created record", line_no=1)
    head = events[0].data
    session = Session(
        id=head["id"],
        feature=FeatureSpec.from_dict(head["feature"]),
        pattern=InteractionPattern(head["pattern"]),
        workspace_path=Path(head["workspace_path"]),
        created_at=datetime.fromisoformat(head["created_at"]),
    )
    for event in events[1:]:
        if event.kind == EVENT_ITERATION_FINISHED:
            record = IterationRecord.from_dict(event.data)
            append_iteration(session, record)
        elif event.kind == EVENT_SESSION_COMPLETED:
            session.set_status(SessionStatus.COMPLETED)
        elif event.kind == EVENT_SESSION_HALTED:
            session.set_status(SessionStatus.HALTED)
        elif event.kind == EVENT_DECISION_REQUESTED:
            session.set_status(SessionStatus.AWAITING_DEVELOPER)
        elif event.kind == EVENT_DECISION_RECEIVED:
            session.set_status(SessionStatus.RUNNING)
    return session


def load_session(source: str | Path | Iterable[str]) -> Session:
    """Reconstruct a Session from a log file path or an iterable of lines.

    Tolerates a truncated final entry (the partial record is ignored);
    any other malformed entry raises SessionLogError with its line number.
    """
    if isinstance(source, (str, Path)):
        lines: Iterable[str] = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = source
    return fold_events(parse_log_lines(lines).events)


def serialize_session(session: Session) -> list[LogEvent]:
    """Event sequence equivalent to the session's state (for round-trips)."""
    created = make_event(
        EVENT_SESSION_CREATED,
        {
            "id": session.id,
            "feature": session.feature.to_dict(),
            "pattern": session.pattern.value,
            "workspace_path": str(session.workspace_path),
            "created_at": session.created_at.isoformat(),
        },
        at=session.created_at,
    )
    events = [created]
    for record in session.iterations:
        events.append(make_event(EVENT_ITERATION_FINISHED, record.to_dict(), at=record.finished_at))
    if session.status is SessionStatus.COMPLETED:
        events.append(make_event(EVENT_SESSION_COMPLETED, {"iterations": len(session.iterations)}))
    elif session.status is SessionStatus.HALTED:
        events.append(make_event(EVENT_SESSION_HALTED, {"cause": "serialized"}))
    elif session.status is SessionStatus.AWAITING_DEVELOPER:
        events.append(make_event(EVENT_DECISION_REQUESTED, {"iteration_index": len(session.iterations) + 1}))
    return events


def write_session(session: Session, path: str | Path) -> None:
    log = SessionLog(path)
    for event in serialize_session(session):
        log.append(event)


def append_iteration(
    session: Session, record: IterationRecord, log: SessionLog | None = None
) -> Session:
    """Append one finished iteration; rejects non-consecutive indices."""
    expected = len(session.iterations) + 1
    if record.index != expected:
        raise SequencingError(
            f"iteration index {record.index} does not follow {len(session.iterations)} recorded iterations "
            f"(expected {expected})"
        )
    session.iterations.append(record)
    if log is not None:
        log.append(make_event(EVENT_ITERATION_FINISHED, record.to_dict(), at=record.finished_at))
    return session
