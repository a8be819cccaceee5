"""Runs the workspace's test suite in a child process and classifies the result.

The child gets an allow-listed environment (PATH plus explicitly configured
variables), its working directory is the workspace, and both output streams
are captured into one log in arrival order. A nonzero exit with recognizable
test-failure markers is a content failure worth retrying; a nonzero exit
without them means the toolchain itself is broken.
"""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .session import RunStatus, TestRunOutcome

DEFAULT_TIMEOUT_SECONDS = 30.0
TIMEOUT_EXIT_CODE = -9

_TIMING_RE = re.compile(r"\b(in|after) \d+(\.\d+)?s\b")
_ADDRESS_RE = re.compile(r"0x[0-9a-fA-F]+")


@dataclass(frozen=True)
class RunnerProfile:
    """A named test-runner command plus the log markers meaning 'tests failed'."""

    name: str
    command_template: str
    failure_markers: tuple[str, ...]


# Default profile: the stdlib unit-test runner of the language under test.
UNITTEST_PROFILE = RunnerProfile(
    name="unittest",
    command_template="{python} -m unittest discover -s {workspace} -v",
    failure_markers=("FAIL:", "FAILED (", "ERROR:"),
)

PYTEST_PROFILE = RunnerProfile(
    name="pytest",
    command_template="{python} -m pytest -q {workspace}",
    failure_markers=("failed", "error", "FAILED", "ERROR"),
)

PROFILES = {profile.name: profile for profile in (UNITTEST_PROFILE, PYTEST_PROFILE)}


@dataclass(frozen=True)
class HarnessConfig:
    command_template: str = UNITTEST_PROFILE.command_template
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS
    failure_markers: tuple[str, ...] = UNITTEST_PROFILE.failure_markers
    env_allowlist: tuple[str, ...] = ("PATH",)
    extra_env: tuple[tuple[str, str], ...] = ()

    @classmethod
    def from_profile(cls, profile: RunnerProfile, **overrides) -> "HarnessConfig":
        return cls(
            command_template=profile.command_template,
            failure_markers=profile.failure_markers,
            **overrides,
        )


def normalize_execution_log(log: str, workspace: str | Path | None = None) -> str:
    """Strip run-to-run noise (timings, addresses, workspace paths) from a log.

    Used when a captured log is embedded into a retry prompt, so recorded
    sessions replay byte-identically; the raw log is still what gets stored.
    """
    text = _TIMING_RE.sub(lambda m: f"{m.group(1)} 0.000s", log)
    text = _ADDRESS_RE.sub("0x0", text)
    if workspace is not None:
        text = text.replace(str(Path(workspace).resolve()), "<workspace>")
        text = text.replace(str(workspace), "<workspace>")
    return text


def _child_env(config: HarnessConfig) -> dict[str, str]:
    env = {name: os.environ[name] for name in config.env_allowlist if name in os.environ}
    env.update(dict(config.extra_env))
    return env


def run_tests(workspace: str | Path, config: HarnessConfig | None = None) -> TestRunOutcome:
    """Execute the configured runner inside the workspace and classify it."""
    config = config or HarnessConfig()
    workspace = Path(workspace)
    command = config.command_template.format(workspace=str(workspace), python=sys.executable)
    argv = shlex.split(command)

    started = time.monotonic()
    try:
        completed = subprocess.run(
            argv,
            cwd=workspace,
            env=_child_env(config),
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            timeout=config.timeout_seconds,
            text=True,
        )
    except subprocess.TimeoutExpired as exc:
        partial = exc.output or ""
        if isinstance(partial, bytes):
            partial = partial.decode("utf-8", errors="replace")
        log = partial + f"\n[test run terminated after {config.timeout_seconds}s timeout]"
        return TestRunOutcome(
            status=RunStatus.TIMEOUT,
            exit_code=TIMEOUT_EXIT_CODE,
            log=log,
            duration_seconds=time.monotonic() - started,
        )
    except FileNotFoundError:
        return TestRunOutcome(
            status=RunStatus.ERROR,
            exit_code=127,
            log=f"test runner not found: {argv[0]!r} (command: {command})",
            duration_seconds=time.monotonic() - started,
        )
    except OSError as exc:
        return TestRunOutcome(
            status=RunStatus.ERROR,
            exit_code=126,
            log=f"could not start test runner {argv[0]!r}: {exc}",
            duration_seconds=time.monotonic() - started,
        )

    duration = time.monotonic() - started
    log = completed.stdout or ""
    if completed.returncode == 0:
        status = RunStatus.PASSED
    elif any(marker in log for marker in config.failure_markers):
        status = RunStatus.FAILED
    else:
        status = RunStatus.ERROR
    return TestRunOutcome(
        status=status, exit_code=completed.returncode, log=log, duration_seconds=duration
    )
