"""Session measurements: test functions, assertions, LOC, time, iterations.

LOC excludes blank lines only; comments count. Assertions are counted inside
test-prefixed functions (the report header states this convention).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .integrator import DEFAULT_TEST_NAME_PREFIX, scan_source
from .session import CodeArtifacts, Session

ASSERTION_SCOPE_NOTE = "assertions are counted inside test-prefixed functions only"


@dataclass(frozen=True)
class SessionMetrics:
    test_functions: int
    assertions: int
    test_loc: int
    code_loc: int
    elapsed_seconds: float | None
    iterations: int | None

    def __post_init__(self):
        for name in ("test_functions", "assertions", "test_loc", "code_loc"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} cannot be negative")

    def to_dict(self) -> dict:
        return {
            "test_functions": self.test_functions,
            "assertions": self.assertions,
            "test_loc": self.test_loc,
            "code_loc": self.code_loc,
            "elapsed_seconds": self.elapsed_seconds,
            "iterations": self.iterations,
        }


def count_loc(text: str) -> int:
    """Lines of code excluding blank (empty or whitespace-only) lines."""
    return sum(1 for line in text.splitlines() if line.strip())


def compute_metrics(
    artifacts: CodeArtifacts,
    session: Session | None = None,
    elapsed_seconds: float | None = None,
    test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX,
) -> SessionMetrics:
    """Measure the artifacts; session supplies elapsed time and iterations.

    For a bare workspace (non-automated pattern) pass ``elapsed_seconds``
    from an external timer, or leave both unset to mark them not applicable.
    """
    scan = scan_source(artifacts.test.text, test_name_prefix)
    iterations: int | None = None
    if session is not None:
        iterations = len(session.iterations)
        if elapsed_seconds is None and session.iterations:
            delta = session.iterations[-1].finished_at - session.created_at
            elapsed_seconds = delta.total_seconds()
    return SessionMetrics(
        test_functions=scan.test_function_count,
        assertions=scan.test_assertion_count,
        test_loc=count_loc(artifacts.test.text),
        code_loc=count_loc(artifacts.production.text),
        elapsed_seconds=elapsed_seconds,
        iterations=iterations,
    )


def _format_elapsed(seconds: float | None) -> str:
    if seconds is None:
        return "n/a"
    minutes, rest = divmod(int(round(seconds)), 60)
    return f"{minutes} min {rest} s"


def render_report(metrics: SessionMetrics, session: Session | None = None) -> str:
    """Deterministic plain-text report: metrics table plus iteration timeline."""
    lines = [
        "TDD session report",
        "==================",
    ]
    if session is not None:
        lines.append(
            f"session {session.id}  pattern={session.pattern.value}  status={session.status.value}"
        )
        summary = " ".join(session.feature.description.split())
        if len(summary) > 72:
            summary = summary[:72] + "..."
        lines.append(f"feature: {summary}")
    lines.append(f"note: {ASSERTION_SCOPE_NOTE}")
    lines.append("")
    rows = [
        ("test functions", str(metrics.test_functions)),
        ("assertions", str(metrics.assertions)),
        ("test LOC", str(metrics.test_loc)),
        ("code LOC", str(metrics.code_loc)),
        ("time to complete", _format_elapsed(metrics.elapsed_seconds)),
        ("iterations", "n/a" if metrics.iterations is None else str(metrics.iterations)),
    ]
    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        lines.append(f"{label.ljust(width)}  {value}")

    if session is not None and session.iterations:
        lines.append("")
        lines.append("iteration timeline")
        for record in session.iterations:
            lines.append(
                f"  {record.index:>3}  {record.phase.value:<12} attempts={record.attempts}  "
                f"{record.outcome.status.value}"
            )
            if record.developer_edits:
                lines.append(f"       developer: {record.developer_edits}")
            for warning in record.warnings:
                lines.append(f"       warning: {warning}")
    return "\n".join(lines) + "\n"


def render_report_json(metrics: SessionMetrics, session: Session | None = None) -> str:
    """Machine-readable counterpart of render_report."""
    payload: dict = {"metrics": metrics.to_dict(), "assertion_scope": ASSERTION_SCOPE_NOTE}
    if session is not None:
        payload["session"] = {
            "id": session.id,
            "pattern": session.pattern.value,
            "status": session.status.value,
            "iterations": [
                {
                    "index": r.index,
                    "phase": r.phase.value,
                    "attempts": r.attempts,
                    "outcome": r.outcome.status.value,
                    "warnings": list(r.warnings),
                    "developer_edits": r.developer_edits,
                }
                for r in session.iterations
            ],
        }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
