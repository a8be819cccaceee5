from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "tddloop" / "fixtures"


@pytest.fixture(scope="session")
def f1_feature_path() -> Path:
    return FIXTURES / "f1_feature.toml"


@pytest.fixture(scope="session")
def f1_fixture_path() -> Path:
    return FIXTURES / "f1_fixture.jsonl"


@pytest.fixture(scope="session")
def collab_fixture_path() -> Path:
    return FIXTURES / "collab_fixture.jsonl"


@pytest.fixture(scope="session")
def collab_script_path() -> Path:
    return FIXTURES / "collab_script.json"


@pytest.fixture(scope="session")
def f1_session_log(tmp_path_factory, f1_feature_path, f1_fixture_path):
    """One completed F1 replay run shared by tests that only read its log."""
    from tddloop.engine import create_session, run_fully_automated
    from tddloop.feature import load_feature_file
    from tddloop.provider import ReplayProvider
    from tddloop.session import InteractionPattern, SessionLog

    root = tmp_path_factory.mktemp("f1run")
    log = SessionLog(root / "session.log")
    session = create_session(
        load_feature_file(f1_feature_path),
        InteractionPattern.FULLY_AUTOMATED,
        root / "ws",
        log,
    )
    session = run_fully_automated(
        session, ReplayProvider.from_path(f1_fixture_path), log
    )
    return session, log.path
