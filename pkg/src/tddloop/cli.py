"""Command-line entry point.

Subcommands: run (fully-automated session), serve (collaborative session
behind the HTTP API), metrics (measure a bare workspace), replay (re-render
a report from a session log), config (show resolved defaults).
Configuration precedence: flags > config file > defaults.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import metrics as metrics_mod
from .api import SessionController, create_app
from .engine import CollaborativeEngine, create_session, run_fully_automated
from .errors import TddLoopError
from .feature import load_feature_file
from .harness import PROFILES, HarnessConfig
from .integrator import read_workspace
from .provider import DEFAULT_BASE_URL, DEFAULT_MODEL, LiveProvider, ModelConfig, ReplayProvider
from .session import (
    InteractionPattern,
    SessionLog,
    SessionStatus,
    initial_artifacts,
    load_session,
    parse_log_lines,
)

logger = logging.getLogger(__name__)

API_KEY_ENV = "TDDLOOP_API_KEY"
BASE_URL_ENV = "TDDLOOP_BASE_URL"


@dataclass
class RunConfig:
    feature: str | None = None
    workspace: str = "workspace"
    log: str | None = None
    fixture: str | None = None
    live: bool = False
    model_name: str = DEFAULT_MODEL
    base_url: str = DEFAULT_BASE_URL
    temperature: float = 0.0
    max_context_tokens: int = 16000
    request_timeout: float = 60.0
    runner_profile: str = "unittest"
    runner_template: str | None = None
    test_timeout: float = 30.0
    max_iterations: int = 15
    test_name_prefix: str = "test"
    host: str = "127.0.0.1"
    port: int = 8765


def _load_config_file(path: str) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return data.get("tddloop", data)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        overrides = _load_config_file(args.config)
        for item in fields(RunConfig):
            if item.name in overrides:
                setattr(config, item.name, overrides[item.name])
    for item in fields(RunConfig):
        value = getattr(args, item.name, None)
        if value is not None and value is not False:
            setattr(config, item.name, value)
    return config


def _harness_config(config: RunConfig) -> HarnessConfig:
    profile = PROFILES.get(config.runner_profile)
    if profile is None:
        raise TddLoopError(
            f"unknown runner profile {config.runner_profile!r} (choose from {sorted(PROFILES)})"
        )
    return HarnessConfig(
        command_template=config.runner_template or profile.command_template,
        failure_markers=profile.failure_markers,
        timeout_seconds=config.test_timeout,
    )


def _model_config(config: RunConfig) -> ModelConfig:
    return ModelConfig(
        model_name=config.model_name,
        max_context_tokens=config.max_context_tokens,
        temperature=config.temperature,
        request_timeout_seconds=config.request_timeout,
        api_key=os.environ.get(API_KEY_ENV),
        base_url=os.environ.get(BASE_URL_ENV, config.base_url),
    )


def _build_provider(config: RunConfig, parser: argparse.ArgumentParser):
    if config.fixture and config.live:
        parser.error("choose either --fixture or --live, not both")
    if config.fixture:
        if not Path(config.fixture).exists():
            parser.error(f"replay fixture not found: {config.fixture}")
        return ReplayProvider.from_path(config.fixture, config=_model_config(config))
    if config.live:
        if not os.environ.get(API_KEY_ENV):
            parser.error(f"--live needs an API key in ${API_KEY_ENV}")
        return LiveProvider(_model_config(config))
    parser.error("select a provider: --fixture PATH or --live")


def _session_log(config: RunConfig, parser: argparse.ArgumentParser) -> SessionLog:
    log_path = Path(config.log) if config.log else Path(config.workspace) / "session.log"
    if log_path.exists():
        parser.error(f"session log {log_path} already exists; move it or pass --log")
    log_path.parent.mkdir(parents=True, exist_ok=True)
    return SessionLog(log_path)


def cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = resolve_config(args)
    if not config.feature:
        parser.error("--feature is required")
    if not Path(config.feature).exists():
        parser.error(f"feature file not found: {config.feature}")
    feature = load_feature_file(config.feature)
    provider = _build_provider(config, parser)
    log = _session_log(config, parser)

    session = create_session(feature, InteractionPattern.FULLY_AUTOMATED, config.workspace, log)
    session = run_fully_automated(
        session,
        provider,
        log,
        harness_config=_harness_config(config),
        max_iterations=config.max_iterations,
        test_name_prefix=config.test_name_prefix,
    )
    artifacts = session.last_artifacts or initial_artifacts(feature)
    report = metrics_mod.render_report(
        metrics_mod.compute_metrics(artifacts, session, test_name_prefix=config.test_name_prefix),
        session,
    )
    print(report, end="")
    print(f"session log: {log.path}")
    return 0 if session.status is SessionStatus.COMPLETED else 1


def cmd_serve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    import uvicorn

    config = resolve_config(args)
    if not config.feature:
        parser.error("--feature is required")
    feature = load_feature_file(config.feature)
    provider = _build_provider(config, parser)
    log = _session_log(config, parser)

    session = create_session(feature, InteractionPattern.COLLABORATIVE, config.workspace, log)
    controller = SessionController()
    history = parse_log_lines(log.read_lines()).events
    engine = CollaborativeEngine(
        session,
        provider,
        log,
        harness_config=_harness_config(config),
        max_iterations=config.max_iterations,
        test_name_prefix=config.test_name_prefix,
        listeners=[controller.on_event],
    )
    controller.attach(engine, history)
    app = create_app(controller)
    print(f"serving collaborative session {session.id} on http://{config.host}:{config.port}")
    print(f"session log: {log.path}")
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    except OSError as exc:
        print(f"cannot bind {config.host}:{config.port}: {exc}", file=sys.stderr)
        return 1
    return 0


def _autodetect(workspace: Path, explicit_test: str | None, explicit_prod: str | None):
    test_name = explicit_test
    prod_name = explicit_prod
    if test_name is None:
        candidates = sorted(p.name for p in workspace.glob("test_*.py"))
        test_name = candidates[0] if len(candidates) == 1 else "test_feature.py"
    if prod_name is None:
        candidates = sorted(
            p.name for p in workspace.glob("*.py") if not p.name.startswith("test_")
        )
        prod_name = candidates[0] if len(candidates) == 1 else "feature.py"
    return test_name, prod_name


def cmd_metrics(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    workspace = Path(args.workspace)
    if not workspace.exists():
        parser.error(f"workspace not found: {workspace}")
    test_name, prod_name = _autodetect(workspace, args.test_file, args.production_file)
    artifacts = read_workspace(workspace, test_name, prod_name)
    result = metrics_mod.compute_metrics(
        artifacts, elapsed_seconds=args.elapsed, test_name_prefix=args.test_name_prefix or "test"
    )
    if args.json:
        print(metrics_mod.render_report_json(result), end="")
    else:
        print(metrics_mod.render_report(result), end="")
    return 0


def cmd_replay(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if not Path(args.log).exists():
        parser.error(f"session log not found: {args.log}")
    session = load_session(args.log)
    artifacts = session.last_artifacts or initial_artifacts(session.feature)
    result = metrics_mod.compute_metrics(artifacts, session)
    if args.json:
        print(metrics_mod.render_report_json(result, session), end="")
    else:
        print(metrics_mod.render_report(result, session), end="")
    return 0


def cmd_config_show(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = resolve_config(args)
    for item in sorted(fields(RunConfig), key=lambda f: f.name):
        print(f"{item.name} = {getattr(config, item.name)!r}")
    print(f"# precedence: flags > config file > defaults")
    print(f"# live API key env: {API_KEY_ENV}; base URL override env: {BASE_URL_ENV}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file (overridden by flags)")
    parser.add_argument("--feature", help="feature specification file (TOML)")
    parser.add_argument("--workspace", help="workspace directory")
    parser.add_argument("--log", help="session log path (default: <workspace>/session.log)")
    parser.add_argument("--fixture", help="replay fixture path (offline provider)")
    parser.add_argument("--live", action="store_true", help="use the live HTTP provider")
    parser.add_argument("--model-name", dest="model_name")
    parser.add_argument("--base-url", dest="base_url")
    parser.add_argument("--temperature", type=float)
    parser.add_argument("--max-context-tokens", dest="max_context_tokens", type=int)
    parser.add_argument("--request-timeout", dest="request_timeout", type=float)
    parser.add_argument("--runner-profile", dest="runner_profile", choices=sorted(PROFILES))
    parser.add_argument(
        "--runner-template",
        dest="runner_template",
        help="test runner command; {workspace} and {python} are substituted",
    )
    parser.add_argument("--test-timeout", dest="test_timeout", type=float)
    parser.add_argument("--max-iterations", dest="max_iterations", type=int)
    parser.add_argument("--test-name-prefix", dest="test_name_prefix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tddloop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="run a fully-automated session")
    _add_common(run_parser)

    serve_parser = sub.add_parser("serve", help="serve a collaborative session over HTTP")
    _add_common(serve_parser)
    serve_parser.add_argument("--host")
    serve_parser.add_argument("--port", type=int)

    metrics_parser = sub.add_parser("metrics", help="measure a bare workspace")
    metrics_parser.add_argument("--workspace", required=True)
    metrics_parser.add_argument("--elapsed", type=float, help="externally timed seconds")
    metrics_parser.add_argument("--test-file", dest="test_file")
    metrics_parser.add_argument("--production-file", dest="production_file")
    metrics_parser.add_argument("--test-name-prefix", dest="test_name_prefix")
    metrics_parser.add_argument("--json", action="store_true")

    replay_parser = sub.add_parser("replay", help="re-render a report from a session log")
    replay_parser.add_argument("--log", required=True)
    replay_parser.add_argument("--json", action="store_true")

    config_parser = sub.add_parser("config", help="configuration helpers")
    config_sub = config_parser.add_subparsers(dest="config_command", required=True)
    show_parser = config_sub.add_parser("show", help="print resolved configuration")
    _add_common(show_parser)
    show_parser.add_argument("--host")
    show_parser.add_argument("--port", type=int)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args, parser)
        if args.command == "serve":
            return cmd_serve(args, parser)
        if args.command == "metrics":
            return cmd_metrics(args, parser)
        if args.command == "replay":
            return cmd_replay(args, parser)
        if args.command == "config":
            return cmd_config_show(args, parser)
    except TddLoopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
