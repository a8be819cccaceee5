"""Drive a collaborative session from a JSON decision script, no HTTP.

Useful for demos and for checking that the HTTP API is a faithful projection
of the engine: the same script driven over the API must produce an equivalent
session log.

    python -m tddloop.scripted --feature f.toml --fixture replay.jsonl \
        --workspace ws --log ws/session.log --script decisions.json
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import CollaborativeEngine, DecisionKind, DeveloperDecision, create_session
from .harness import PROFILES, HarnessConfig
from .feature import load_feature_file
from .provider import ReplayProvider
from .session import InteractionPattern, SessionLog, SessionStatus


def load_script(path: str | Path) -> list[DeveloperDecision]:
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    decisions = []
    for entry in entries:
        decisions.append(
            DeveloperDecision(
                kind=DecisionKind(entry["kind"]),
                test_source=entry.get("test_source"),
                production_source=entry.get("production_source"),
                prompt=entry.get("prompt"),
                note=entry.get("note"),
            )
        )
    return decisions


def run_script(
    feature_path: str,
    fixture_path: str,
    workspace: str,
    log_path: str,
    script_path: str,
    runner_profile: str = "unittest",
) -> SessionStatus:
    feature = load_feature_file(feature_path)
    provider = ReplayProvider.from_path(fixture_path)
    log = SessionLog(log_path)
    session = create_session(feature, InteractionPattern.COLLABORATIVE, workspace, log)
    profile = PROFILES[runner_profile]
    engine = CollaborativeEngine(
        session,
        provider,
        log,
        harness_config=HarnessConfig(
            command_template=profile.command_template, failure_markers=profile.failure_markers
        ),
    )
    for decision in load_script(script_path):
        engine.submit(decision)
        if session.status in (SessionStatus.COMPLETED, SessionStatus.HALTED):
            break
    return session.status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--feature", required=True)
    parser.add_argument("--fixture", required=True)
    parser.add_argument("--workspace", required=True)
    parser.add_argument("--log", required=True)
    parser.add_argument("--script", required=True)
    parser.add_argument("--runner-profile", default="unittest", choices=sorted(PROFILES))
    args = parser.parse_args(argv)
    status = run_script(
        args.feature, args.fixture, args.workspace, args.log, args.script, args.runner_profile
    )
    print(f"session status: {status.value}")
    return 0 if status is SessionStatus.COMPLETED else 1


if __name__ == "__main__":
    sys.exit(main())
