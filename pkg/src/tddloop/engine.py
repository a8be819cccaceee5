"""The iteration state machine that drives a TDD session.

Both interaction patterns share the same inner step: build the prompt for the
current phase, send it with the previous reply as context, integrate the
extracted code, run the tests. A failing run re-sends the prompt (with the
execution log attached) at most five times; exhausting the cap halts the
session. The refactor phase runs once, last, and its tests must pass for the
session to complete.

Every state change is appended to the session log before anything else
happens, so killing the process at any point leaves a log from which
``resume_fully_automated`` reaches the same final state.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import (
    AmbiguousBlocksError,
    BudgetError,
    FixtureError,
    RequestError,
    ScanError,
    StateError,
    TransportError,
)
from .feature import FeatureSpec
from .harness import HarnessConfig, normalize_execution_log, run_tests
from .integrator import (
    BlockKind,
    DEFAULT_TEST_NAME_PREFIX,
    extract_blocks,
    integrate,
    read_workspace,
    write_workspace,
)
from .prompts import (
    assemble_context,
    build_first_prompt,
    build_intermediate_prompt,
    build_refactor_prompt,
    build_retry_prompt,
)
from .provider import Provider
from .session import (
    EVENT_ATTEMPT_EXHAUSTED,
    EVENT_DECISION_RECEIVED,
    EVENT_DECISION_REQUESTED,
    EVENT_INTEGRATED,
    EVENT_ITERATION_FINISHED,
    EVENT_ITERATION_STARTED,
    EVENT_PHASE_ADVANCED,
    EVENT_PROMPT_SENT,
    EVENT_REPLY_RECEIVED,
    EVENT_SESSION_COMPLETED,
    EVENT_SESSION_CREATED,
    EVENT_SESSION_HALTED,
    EVENT_TESTS_RUN,
    MAX_ATTEMPTS,
    CodeArtifacts,
    InteractionPattern,
    IterationPhase,
    IterationRecord,
    LogEvent,
    RunStatus,
    Session,
    SessionLog,
    SessionStatus,
    TestRunOutcome,
    append_iteration,
    fold_events,
    initial_artifacts,
    make_event,
    new_session,
    now_utc,
    parse_log_lines,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 15

EventListener = Callable[[LogEvent], None]

_IDENTIFIER_RE = re.compile(r"[A-Za-z_]\w*\Z")


class DecisionKind(str, Enum):
    APPROVE = "approve"
    EDIT_THEN_APPROVE = "edit-then-approve"
    REQUEST_REGENERATION = "request-regeneration"
    DECLARE_FEATURE_COMPLETE = "declare-feature-complete"
    ABORT = "abort"


@dataclass(frozen=True)
class DeveloperDecision:
    """One developer instruction to a collaborative session."""

    kind: DecisionKind
    test_source: str | None = None
    production_source: str | None = None
    prompt: str | None = None
    note: str | None = None

    def __post_init__(self):
        if self.kind is DecisionKind.EDIT_THEN_APPROVE and not self.modifications():
            raise ValueError("edit-then-approve needs at least one modification")

    def modifications(self) -> tuple[str, ...]:
        mods = []
        if self.test_source is not None:
            mods.append("test document")
        if self.production_source is not None:
            mods.append("production document")
        if self.prompt is not None:
            mods.append("prompt")
        return tuple(mods)


class _Emitter:
    """Appends events to the session log, then notifies listeners."""

    def __init__(self, log: SessionLog, listeners: Iterable[EventListener] = ()):
        self.log = log
        self.listeners = list(listeners)

    def emit(self, kind: str, data: dict, at: datetime | None = None) -> LogEvent:
        event = make_event(kind, data, at=at)
        self.log.append(event)
        for listener in self.listeners:
            listener(event)
        return event


def create_session(
    feature: FeatureSpec,
    pattern: InteractionPattern,
    workspace_path: str | Path,
    log: SessionLog,
    session_id: str | None = None,
) -> Session:
    """Create a session and write its opening log record."""
    session = new_session(feature, pattern, workspace_path, session_id=session_id)
    log.append(
        make_event(
            EVENT_SESSION_CREATED,
            {
                "id": session.id,
                "feature": feature.to_dict(),
                "pattern": pattern.value,
                "workspace_path": str(session.workspace_path),
                "created_at": session.created_at.isoformat(),
            },
            at=session.created_at,
        )
    )
    return session


def _references(text: str, entry: str) -> bool:
    if _IDENTIFIER_RE.fullmatch(entry):
        return re.search(rf"\b{re.escape(entry)}\b", text) is not None
    return entry in text


def completion_check(session: Session, feature: FeatureSpec) -> bool:
    """True when every checklist entry is referenced by some passing test.

    The checklist comes from the feature's declared functions (or, absent
    those, its expected-output literals). An empty checklist is trivially
    complete after the first passing iteration.
    """
    passing = [r for r in session.iterations if r.outcome.status is RunStatus.PASSED]
    if not passing:
        raise StateError("completion check needs at least one passing iteration")
    checklist = feature.checklist()
    satisfied = set()
    for record in passing:
        text = record.artifacts_after.test.text
        for entry in checklist:
            if entry not in satisfied and _references(text, entry):
                satisfied.add(entry)
    return len(satisfied) == len(checklist)


def _base_prompt(phase: IterationPhase, feature: FeatureSpec) -> str:
    if phase is IterationPhase.FIRST:
        return build_first_prompt(feature)
    if phase is IterationPhase.REFACTOR:
        return build_refactor_prompt()
    return build_intermediate_prompt()


def render_artifacts_as_reply(artifacts: CodeArtifacts) -> str | None:
    """Present the current documents as the previous-output context turn.

    Collaborative sessions hand the developer-owned documents back to the
    model: the previous-reply slot carries whatever the developer approved
    or edited, not the model's raw wording. Returns None when both
    documents are still empty.
    """
    sections = []
    if artifacts.test.text:
        body = artifacts.test.text.rstrip("\n")
        sections.append(f"Here is the test code:\n\n```python\n{body}\n```")
    if artifacts.production.text:
        body = artifacts.production.text.rstrip("\n")
        sections.append(f"And here is the production code:\n\n```python\n{body}\n```")
    if not sections:
        return None
    return "\n\n".join(sections)


def _integration_failure(detail: str) -> TestRunOutcome:
    # Stand-in outcome for attempts that never reached a test run.
    return TestRunOutcome(status=RunStatus.FAILED, exit_code=1, log=detail, duration_seconds=0.0)


@dataclass
class _LoopState:
    artifacts: CodeArtifacts
    last_reply: str | None
    phase: IterationPhase
    index: int


class _ProviderFailure(Exception):
    def __init__(self, cause: str):
        super().__init__(cause)
        self.cause = cause


def _halt(session: Session, emitter: _Emitter, cause: str) -> Session:
    session.set_status(SessionStatus.HALTED)
    emitter.emit(EVENT_SESSION_HALTED, {"cause": cause})
    logger.info("session %s halted: %s", session.id, cause)
    return session


def _complete(session: Session, emitter: _Emitter) -> Session:
    session.set_status(SessionStatus.COMPLETED)
    emitter.emit(EVENT_SESSION_COMPLETED, {"iterations": len(session.iterations)})
    logger.info("session %s completed in %d iterations", session.id, len(session.iterations))
    return session


def _exchange(
    provider: Provider,
    emitter: _Emitter,
    index: int,
    attempt: int,
    prompt: str,
    previous_reply: str | None,
) -> str:
    context = assemble_context(previous_reply, prompt)
    emitter.emit(
        EVENT_PROMPT_SENT,
        {
            "index": index,
            "attempt": attempt,
            "prompt": prompt,
            "previous_reply_included": previous_reply is not None,
        },
    )
    try:
        reply = provider.complete(context)
    except (BudgetError, TransportError, RequestError, FixtureError) as exc:
        raise _ProviderFailure(f"provider failure: {exc}") from exc
    emitter.emit(EVENT_REPLY_RECEIVED, {"index": index, "attempt": attempt, "reply": reply.text})
    return reply.text


def _integrate_attempt(
    session: Session,
    emitter: _Emitter,
    artifacts: CodeArtifacts,
    reply_text: str,
    index: int,
    attempt: int,
    test_name_prefix: str,
    allowed: frozenset[BlockKind],
) -> tuple[CodeArtifacts, list[str], str | None]:
    """Integrate one reply; returns (artifacts, warnings, failure detail)."""
    blocks = extract_blocks(reply_text, test_name_prefix)
    try:
        new_artifacts, report = integrate(artifacts, blocks, test_name_prefix, allowed)
    except (AmbiguousBlocksError, ScanError) as exc:
        detail = f"integration failed: {exc}"
        emitter.emit(
            EVENT_INTEGRATED,
            {
                "index": index,
                "attempt": attempt,
                "updated": [],
                "warnings": [{"kind": "integration-error", "detail": str(exc)}],
            },
        )
        return artifacts, [f"integration-error: {exc}"], detail

    write_workspace(session.workspace_path, new_artifacts)
    emitter.emit(
        EVENT_INTEGRATED,
        {
            "index": index,
            "attempt": attempt,
            "updated": sorted(report.updated),
            "warnings": [{"kind": w.kind, "detail": w.detail} for w in report.warnings],
            "previous_test_function_count": report.previous_test_function_count,
            "new_test_function_count": report.new_test_function_count,
        },
    )
    warnings = [str(w) for w in report.warnings]
    if not report.updated:
        return new_artifacts, warnings, "reply contained no integrable code blocks"
    return new_artifacts, warnings, None


def _run_suite(
    session: Session, emitter: _Emitter, harness_config: HarnessConfig, index: int, attempt: int
) -> TestRunOutcome:
    outcome = run_tests(session.workspace_path, harness_config)
    emitter.emit(
        EVENT_TESTS_RUN,
        {
            "index": index,
            "attempt": attempt,
            "status": outcome.status.value,
            "exit_code": outcome.exit_code,
            "duration_seconds": outcome.duration_seconds,
            "log": outcome.log,
        },
    )
    return outcome


def _auto_loop(
    session: Session,
    provider: Provider,
    emitter: _Emitter,
    harness_config: HarnessConfig,
    state: _LoopState,
    max_iterations: int,
    test_name_prefix: str,
) -> Session:
    feature = session.feature
    allowed = frozenset({BlockKind.TEST, BlockKind.PRODUCTION})
    while True:
        if state.index > max_iterations:
            return _halt(session, emitter, f"iteration budget exceeded ({max_iterations})")
        emitter.emit(
            EVENT_ITERATION_STARTED, {"index": state.index, "phase": state.phase.value}
        )
        base_prompt = _base_prompt(state.phase, feature)
        started_at = now_utc()
        raw_replies: list[str] = []
        warnings: list[str] = []
        current = state.artifacts
        outcome: TestRunOutcome | None = None
        failure_log = ""
        passed = False

        for attempt in range(1, MAX_ATTEMPTS + 1):
            prompt = base_prompt if attempt == 1 else build_retry_prompt(base_prompt, failure_log)
            try:
                reply_text = _exchange(
                    provider, emitter, state.index, attempt, prompt, state.last_reply
                )
            except _ProviderFailure as exc:
                return _halt(session, emitter, exc.cause)
            raw_replies.append(reply_text)
            state.last_reply = reply_text

            current, attempt_warnings, detail = _integrate_attempt(
                session, emitter, current, reply_text, state.index, attempt,
                test_name_prefix, allowed,
            )
            warnings.extend(attempt_warnings)
            if detail is not None:
                outcome = _integration_failure(detail)
                failure_log = detail
                continue

            outcome = _run_suite(session, emitter, harness_config, state.index, attempt)
            if outcome.status is RunStatus.PASSED:
                passed = True
                break
            if outcome.status is RunStatus.ERROR:
                record = IterationRecord(
                    index=state.index,
                    phase=state.phase,
                    prompt_sent=base_prompt,
                    raw_replies=tuple(raw_replies),
                    attempts=len(raw_replies),
                    artifacts_after=current,
                    outcome=outcome,
                    started_at=started_at,
                    finished_at=now_utc(),
                    warnings=tuple(warnings),
                )
                append_iteration(session, record)
                emitter.emit(EVENT_ITERATION_FINISHED, record.to_dict(), at=record.finished_at)
                return _halt(session, emitter, f"test harness error: {outcome.log[:200]}")
            failure_log = normalize_execution_log(outcome.log, session.workspace_path)

        record = IterationRecord(
            index=state.index,
            phase=state.phase,
            prompt_sent=base_prompt,
            raw_replies=tuple(raw_replies),
            attempts=len(raw_replies),
            artifacts_after=current,
            outcome=outcome if outcome is not None else _integration_failure("no attempt ran"),
            started_at=started_at,
            finished_at=now_utc(),
            warnings=tuple(warnings),
        )
        if not passed:
            emitter.emit(
                EVENT_ATTEMPT_EXHAUSTED, {"index": state.index, "attempts": len(raw_replies)}
            )
            append_iteration(session, record)
            emitter.emit(EVENT_ITERATION_FINISHED, record.to_dict(), at=record.finished_at)
            return _halt(
                session,
                emitter,
                f"iteration {state.index} still failing after {MAX_ATTEMPTS} attempts",
            )

        append_iteration(session, record)
        emitter.emit(EVENT_ITERATION_FINISHED, record.to_dict(), at=record.finished_at)
        state.artifacts = current

        if state.phase is IterationPhase.REFACTOR:
            return _complete(session, emitter)

        next_phase = (
            IterationPhase.REFACTOR
            if completion_check(session, feature)
            else IterationPhase.INTERMEDIATE
        )
        if next_phase is not state.phase:
            emitter.emit(
                EVENT_PHASE_ADVANCED,
                {"from": state.phase.value, "to": next_phase.value, "next_index": state.index + 1},
            )
        state.phase = next_phase
        state.index += 1


def run_fully_automated(
    session: Session,
    provider: Provider,
    log: SessionLog,
    harness_config: HarnessConfig | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX,
    listeners: Sequence[EventListener] = (),
) -> Session:
    """Run a fresh fully-automated session to Completed or Halted."""
    if session.pattern is not InteractionPattern.FULLY_AUTOMATED:
        raise StateError("run_fully_automated needs a fully-automated session")
    if session.iterations:
        raise StateError("session already has iterations; use resume_fully_automated")
    if session.status is not SessionStatus.RUNNING:
        raise StateError(f"session is {session.status.value}, not running")
    emitter = _Emitter(log, listeners)
    artifacts = initial_artifacts(session.feature)
    write_workspace(session.workspace_path, artifacts)
    state = _LoopState(artifacts=artifacts, last_reply=None, phase=IterationPhase.FIRST, index=1)
    return _auto_loop(
        session, provider, emitter, harness_config or HarnessConfig(), state,
        max_iterations, test_name_prefix,
    )


def resume_fully_automated(
    log_path: str | Path,
    provider: Provider,
    harness_config: HarnessConfig | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX,
    listeners: Sequence[EventListener] = (),
) -> Session:
    """Resume an interrupted fully-automated run from its log.

    Completed iterations are taken from the log verbatim; a partially logged
    iteration is re-executed from its start (deterministic with the replay
    provider), and the workspace is restored to the last finished state
    before anything runs.
    """
    log = SessionLog(log_path)
    log.repair_tail()
    parsed = parse_log_lines(log.read_lines())
    session = fold_events(parsed.events)
    if session.pattern is not InteractionPattern.FULLY_AUTOMATED:
        raise StateError("resume_fully_automated needs a fully-automated session log")
    if session.status in (SessionStatus.COMPLETED, SessionStatus.HALTED):
        return session

    emitter = _Emitter(log, listeners)
    artifacts = session.last_artifacts or initial_artifacts(session.feature)
    write_workspace(session.workspace_path, artifacts)

    # The crash may have landed between the last iteration-finished record and
    # the terminal event; recognize an already-decided session before running
    # anything new.
    last = session.iterations[-1] if session.iterations else None
    if last is not None and last.outcome.status is not RunStatus.PASSED:
        if last.outcome.status is RunStatus.ERROR:
            return _halt(session, emitter, f"test harness error: {last.outcome.log[:200]}")
        return _halt(
            session,
            emitter,
            f"iteration {last.index} still failing after {MAX_ATTEMPTS} attempts",
        )
    if last is not None and last.phase is IterationPhase.REFACTOR:
        return _complete(session, emitter)

    last_reply = last.raw_replies[-1] if last is not None else None
    index = len(session.iterations) + 1
    if index == 1:
        phase = IterationPhase.FIRST
    elif completion_check(session, session.feature):
        phase = IterationPhase.REFACTOR
    else:
        phase = IterationPhase.INTERMEDIATE
    state = _LoopState(artifacts=artifacts, last_reply=last_reply, phase=phase, index=index)
    return _auto_loop(
        session, provider, emitter, harness_config or HarnessConfig(), state,
        max_iterations, test_name_prefix,
    )


@dataclass
class _OpenIteration:
    index: int
    phase: IterationPhase
    base_prompt: str
    started_at: datetime
    raw_replies: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    failure_log: str = ""
    last_outcome: TestRunOutcome | None = None
    edits: list[str] = field(default_factory=list)

    @property
    def attempts(self) -> int:
        return len(self.raw_replies)


class CollaborativeEngine:
    """Steers one collaborative session through developer decisions.

    The session sits in AwaitingDeveloper between steps; every provider call
    is triggered by exactly one accepted decision. The developer owns the
    test document: test blocks in model replies are ignored outside the
    refactor phase, and each provider call carries the current (possibly
    developer-edited) documents as its previous-output turn, so edits reach
    the model.
    """

    def __init__(
        self,
        session: Session,
        provider: Provider,
        log: SessionLog,
        harness_config: HarnessConfig | None = None,
        max_iterations: int = DEFAULT_MAX_ITERATIONS,
        test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX,
        listeners: Sequence[EventListener] = (),
    ):
        if session.pattern is not InteractionPattern.COLLABORATIVE:
            raise StateError("CollaborativeEngine needs a collaborative session")
        self.session = session
        self.provider = provider
        self.harness_config = harness_config or HarnessConfig()
        self.max_iterations = max_iterations
        self.test_name_prefix = test_name_prefix
        self._emitter = _Emitter(log, listeners)
        self._open: _OpenIteration | None = None
        self._refactor_requested = False
        self._pending_edits: list[str] = []

        artifacts = session.last_artifacts or initial_artifacts(session.feature)
        if session.workspace_path.exists():
            on_disk = read_workspace(
                session.workspace_path, artifacts.test.filename, artifacts.production.filename
            )
            if on_disk.test.text or on_disk.production.text:
                artifacts = on_disk
        self.artifacts = artifacts
        self.previous_artifacts = artifacts
        if session.status is SessionStatus.RUNNING and not session.iterations:
            self._request_decision("start")

    # -- state inspection ---------------------------------------------------

    def pending_kind(self) -> str:
        """What the developer is being asked about: start, retry, or review."""
        if self._open is not None:
            return "retry"
        return "start" if not self.session.iterations else "review"

    def next_prompt(self) -> str:
        if self._open is not None:
            return self._open.base_prompt
        return _base_prompt(self._next_phase(), self.session.feature)

    def _next_phase(self) -> IterationPhase:
        if self._refactor_requested:
            return IterationPhase.REFACTOR
        return (
            IterationPhase.FIRST
            if len(self.session.iterations) == 0
            else IterationPhase.INTERMEDIATE
        )

    def state_document(self) -> dict:
        session = self.session
        open_it = self._open
        last = session.iterations[-1] if session.iterations else None
        outcome = None
        if open_it is not None and open_it.last_outcome is not None:
            outcome = open_it.last_outcome
        elif last is not None:
            outcome = last.outcome
        return {
            "id": session.id,
            "pattern": session.pattern.value,
            "status": session.status.value,
            "feature": session.feature.to_dict(),
            "iterations_done": len(session.iterations),
            "current": {
                "index": open_it.index if open_it else len(session.iterations) + 1,
                "phase": (open_it.phase if open_it else self._next_phase()).value,
                "attempts": open_it.attempts if open_it else 0,
                "awaiting": self.pending_kind(),
                "proposed_prompt": self.next_prompt(),
                "failure_log": open_it.failure_log if open_it else "",
            },
            "artifacts": self.artifacts.to_dict(),
            "previous_artifacts": self.previous_artifacts.to_dict(),
            "warnings": list(open_it.warnings if open_it else (last.warnings if last else [])),
            "last_outcome": outcome.to_dict() if outcome is not None else None,
        }

    # -- decision handling --------------------------------------------------

    def submit(self, decision: DeveloperDecision) -> Session:
        """Apply one developer decision; StateError leaves no side effects."""
        self._validate(decision)
        self._emitter.emit(
            EVENT_DECISION_RECEIVED,
            {
                "kind": decision.kind.value,
                "modifications": list(decision.modifications()),
                "note": decision.note,
            },
        )
        self.session.set_status(SessionStatus.RUNNING)
        if decision.kind is DecisionKind.ABORT:
            return _halt(self.session, self._emitter, "developer aborted the session")
        if decision.kind is DecisionKind.DECLARE_FEATURE_COMPLETE:
            self._refactor_requested = True
        self._apply_edits(decision)
        try:
            return self._run_attempt(decision)
        except _ProviderFailure as exc:
            return _halt(self.session, self._emitter, exc.cause)

    def _validate(self, decision: DeveloperDecision) -> None:
        if self.session.status is not SessionStatus.AWAITING_DEVELOPER:
            raise StateError(
                f"decision {decision.kind.value!r} is not allowed while the session is "
                f"{self.session.status.value}"
            )
        if decision.kind is DecisionKind.REQUEST_REGENERATION and self._open is None:
            raise StateError("nothing to regenerate: no attempt has failed in this iteration")
        if decision.kind is DecisionKind.DECLARE_FEATURE_COMPLETE and self._open is not None:
            raise StateError("cannot declare the feature complete while tests are failing")

    def _apply_edits(self, decision: DeveloperDecision) -> None:
        edits = []
        if decision.test_source is not None:
            self.artifacts = self.artifacts.with_test(decision.test_source)
            edits.append("test document")
        if decision.production_source is not None:
            self.artifacts = self.artifacts.with_production(decision.production_source)
            edits.append("production document")
        if edits:
            write_workspace(self.session.workspace_path, self.artifacts)
        if decision.prompt is not None:
            edits.append("prompt")
        if edits:
            description = "edited " + ", ".join(edits)
            if decision.note:
                description += f" ({decision.note})"
            if self._open is not None:
                self._open.edits.append(description)
            else:
                self._pending_edits = getattr(self, "_pending_edits", [])
                self._pending_edits.append(description)

    def _request_decision(self, kind: str) -> None:
        self.session.set_status(SessionStatus.AWAITING_DEVELOPER)
        self._emitter.emit(
            EVENT_DECISION_REQUESTED,
            {
                "awaiting": kind,
                "iteration_index": self._open.index if self._open else len(self.session.iterations) + 1,
            },
        )

    def _run_attempt(self, decision: DeveloperDecision) -> Session:
        session = self.session
        if self._open is None:
            index = len(session.iterations) + 1
            if index > self.max_iterations:
                return _halt(session, self._emitter, f"iteration budget exceeded ({self.max_iterations})")
            phase = self._next_phase()
            base_prompt = decision.prompt or _base_prompt(phase, session.feature)
            self._open = _OpenIteration(
                index=index, phase=phase, base_prompt=base_prompt, started_at=now_utc()
            )
            self._open.edits.extend(self._pending_edits)
            self._pending_edits = []
            self._emitter.emit(
                EVENT_ITERATION_STARTED, {"index": index, "phase": phase.value}
            )
        elif decision.prompt is not None:
            self._open.base_prompt = decision.prompt

        open_it = self._open
        attempt = open_it.attempts + 1
        prompt = (
            open_it.base_prompt
            if attempt == 1 or not open_it.failure_log
            else build_retry_prompt(open_it.base_prompt, open_it.failure_log)
        )
        self.previous_artifacts = self.artifacts

        reply_text = _exchange(
            self.provider,
            self._emitter,
            open_it.index,
            attempt,
            prompt,
            render_artifacts_as_reply(self.artifacts),
        )
        open_it.raw_replies.append(reply_text)

        allowed = (
            frozenset({BlockKind.TEST, BlockKind.PRODUCTION})
            if open_it.phase is IterationPhase.REFACTOR
            else frozenset({BlockKind.PRODUCTION})
        )
        new_artifacts, warnings, detail = _integrate_attempt(
            session, self._emitter, self.artifacts, reply_text, open_it.index, attempt,
            self.test_name_prefix, allowed,
        )
        self.artifacts = new_artifacts
        open_it.warnings.extend(warnings)
        if detail is not None:
            open_it.failure_log = detail
            open_it.last_outcome = _integration_failure(detail)
            return self._after_failure(open_it)

        outcome = _run_suite(session, self._emitter, self.harness_config, open_it.index, attempt)
        open_it.last_outcome = outcome
        if outcome.status is RunStatus.PASSED:
            return self._close_iteration(outcome)
        if outcome.status is RunStatus.ERROR:
            record = self._record_from_open(outcome)
            append_iteration(session, record)
            self._emitter.emit(EVENT_ITERATION_FINISHED, record.to_dict(), at=record.finished_at)
            self._open = None
            return _halt(session, self._emitter, f"test harness error: {outcome.log[:200]}")
        open_it.failure_log = normalize_execution_log(outcome.log, session.workspace_path)
        return self._after_failure(open_it)

    def _after_failure(self, open_it: _OpenIteration) -> Session:
        if open_it.attempts >= MAX_ATTEMPTS:
            self._emitter.emit(
                EVENT_ATTEMPT_EXHAUSTED, {"index": open_it.index, "attempts": open_it.attempts}
            )
            record = self._record_from_open(open_it.last_outcome)
            append_iteration(self.session, record)
            self._emitter.emit(EVENT_ITERATION_FINISHED, record.to_dict(), at=record.finished_at)
            self._open = None
            return _halt(
                self.session,
                self._emitter,
                f"iteration {record.index} still failing after {MAX_ATTEMPTS} attempts",
            )
        self._request_decision("retry")
        return self.session

    def _record_from_open(self, outcome: TestRunOutcome | None) -> IterationRecord:
        open_it = self._open
        assert open_it is not None
        return IterationRecord(
            index=open_it.index,
            phase=open_it.phase,
            prompt_sent=open_it.base_prompt,
            raw_replies=tuple(open_it.raw_replies),
            attempts=open_it.attempts,
            artifacts_after=self.artifacts,
            outcome=outcome if outcome is not None else _integration_failure("no attempt ran"),
            started_at=open_it.started_at,
            finished_at=now_utc(),
            developer_edits="; ".join(open_it.edits) or None,
            warnings=tuple(open_it.warnings),
        )

    def _close_iteration(self, outcome: TestRunOutcome) -> Session:
        record = self._record_from_open(outcome)
        append_iteration(self.session, record)
        self._emitter.emit(EVENT_ITERATION_FINISHED, record.to_dict(), at=record.finished_at)
        finished_phase = self._open.phase if self._open else None
        self._open = None
        if finished_phase is IterationPhase.REFACTOR:
            return _complete(self.session, self._emitter)
        self._request_decision("review")
        return self.session
