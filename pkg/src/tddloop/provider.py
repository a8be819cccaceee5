"""Chat-completion providers: a live HTTP client and a record/replay twin.

The replay provider makes whole sessions deterministic and offline: it holds
an ordered list of (context digest, prompt, reply) steps and answers only
contexts it has recorded. The recorder produces that document from real
exchanges.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import httpx

from .errors import BudgetError, FixtureError, FixtureMismatchError, RequestError, TransportError
from .prompts import ConversationContext

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "gpt-3.5-turbo-16k"
DEFAULT_MAX_CONTEXT_TOKENS = 16000
DEFAULT_BASE_URL = "https://api.openai.com/v1"

TRANSPORT_RETRIES = 3
BACKOFF_START_SECONDS = 1.0


@dataclass(frozen=True)
class ModelConfig:
    model_name: str = DEFAULT_MODEL
    max_context_tokens: int = DEFAULT_MAX_CONTEXT_TOKENS
    temperature: float = 0.0
    request_timeout_seconds: float = 60.0
    api_key: str | None = None
    base_url: str = DEFAULT_BASE_URL

    def __post_init__(self):
        if self.max_context_tokens <= 0:
            raise ValueError("max_context_tokens must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")


@dataclass(frozen=True)
class ProviderReply:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_seconds: float = 0.0


class Provider(Protocol):
    def complete(self, context: ConversationContext) -> ProviderReply: ...


def estimate_tokens(text: str) -> int:
    """Deterministic token estimate: one token per 4 characters, rounded up."""
    return (len(text) + 3) // 4


def estimate_context_tokens(context: ConversationContext) -> int:
    total = estimate_tokens(context.new_prompt)
    if context.previous_reply is not None:
        total += estimate_tokens(context.previous_reply)
    return total


def check_budget(config: ModelConfig, context: ConversationContext) -> None:
    estimated = estimate_context_tokens(context)
    if estimated >= config.max_context_tokens:
        raise BudgetError(
            f"estimated {estimated} tokens does not fit the {config.max_context_tokens}-token context"
        )


def context_digest(context: ConversationContext) -> str:
    payload = json.dumps(
        {"previous_reply": context.previous_reply, "prompt": context.new_prompt},
        ensure_ascii=False,
        sort_keys=True,
    )
    return "sha256:" + hashlib.sha256(payload.encode("utf-8")).hexdigest()


class LiveProvider:
    """Blocking client for an OpenAI-style chat-completions endpoint.

    Transport-level failures are retried up to 3 times with exponential
    backoff starting at 1s; HTTP 4xx responses are never retried. This is
    distinct from the workflow's own five-attempt content retry.
    """

    def __init__(
        self,
        config: ModelConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._sleep = sleep
        self._client = httpx.Client(
            transport=transport, timeout=config.request_timeout_seconds
        )

    def complete(self, context: ConversationContext) -> ProviderReply:
        check_budget(self.config, context)
        if not self.config.api_key:
            raise RequestError("no API key configured for the live provider")
        payload = {
            "model": self.config.model_name,
            "messages": context.to_messages(),
            "temperature": self.config.temperature,
        }
        headers = {"Authorization": f"Bearer {self.config.api_key}"}
        url = self.config.base_url.rstrip("/") + "/chat/completions"

        started = time.monotonic()
        delay = BACKOFF_START_SECONDS
        last_error: Exception | None = None
        for attempt in range(1 + TRANSPORT_RETRIES):
            try:
                response = self._client.post(url, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last_error = exc
                logger.warning("transport failure (attempt %d): %s", attempt + 1, exc)
            else:
                if 400 <= response.status_code < 500:
                    raise RequestError(
                        f"provider rejected the request: HTTP {response.status_code}: {response.text}"
                    )
                if response.status_code >= 500:
                    last_error = TransportError(f"HTTP {response.status_code}: {response.text}")
                    logger.warning("server failure (attempt %d): %s", attempt + 1, last_error)
                else:
                    return self._parse_reply(response, time.monotonic() - started)
            if attempt < TRANSPORT_RETRIES:
                self._sleep(delay)
                delay *= 2
        raise TransportError(f"provider unreachable after {1 + TRANSPORT_RETRIES} attempts: {last_error}")

    @staticmethod
    def _parse_reply(response: httpx.Response, latency: float) -> ProviderReply:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise RequestError(f"malformed provider response: {exc}") from exc
        if not text:
            raise RequestError("provider returned an empty message")
        usage = body.get("usage") or {}
        return ProviderReply(
            text=text,
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"),
            latency_seconds=latency,
        )


@dataclass(frozen=True)
class FixtureStep:
    step: int
    context_digest: str
    prompt: str
    reply: str


def record_fixture(exchanges: Sequence[tuple[ConversationContext, str]]) -> str:
    """Serialize ordered (context, reply) exchanges into a fixture document."""
    if not exchanges:
        raise FixtureError("cannot record an empty exchange list")
    lines = []
    for step_no, (context, reply) in enumerate(exchanges, start=1):
        lines.append(
            json.dumps(
                {
                    "step": step_no,
                    "context_digest": context_digest(context),
                    "prompt": context.new_prompt,
                    "reply": reply,
                },
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + "\n"


def parse_fixture(document: str) -> list[FixtureStep]:
    steps: list[FixtureStep] = []
    seen: set[int] = set()
    for line_no, line in enumerate(document.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            step = FixtureStep(
                step=int(raw["step"]),
                context_digest=raw["context_digest"],
                prompt=raw["prompt"],
                reply=raw["reply"],
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FixtureError(f"fixture line {line_no} is malformed: {exc}") from exc
        if step.step in seen:
            raise FixtureError(f"fixture line {line_no}: duplicate step index {step.step}")
        seen.add(step.step)
        steps.append(step)
    if not steps:
        raise FixtureError("fixture document contains no steps")
    return steps


def load_fixture(path: str | Path) -> list[FixtureStep]:
    return parse_fixture(Path(path).read_text(encoding="utf-8"))


class ReplayProvider:
    """Deterministic provider that answers from a recorded fixture.

    Matching is by context digest. Steps are consumed in order, but an
    already-consumed step keeps answering the same context (a recovered
    session may legitimately re-ask earlier questions). An unknown context
    fails, naming the first step it diverged from.
    """

    def __init__(self, steps: Sequence[FixtureStep], config: ModelConfig | None = None):
        if not steps:
            raise FixtureError("replay provider needs at least one fixture step")
        self.steps = list(steps)
        self.config = config or ModelConfig()
        self._cursor = 0
        self._lock = threading.Lock()

    @classmethod
    def from_path(cls, path: str | Path, config: ModelConfig | None = None) -> "ReplayProvider":
        return cls(load_fixture(path), config=config)

    def complete(self, context: ConversationContext) -> ProviderReply:
        check_budget(self.config, context)
        digest = context_digest(context)
        with self._lock:
            for offset, step in enumerate(self.steps[self._cursor :]):
                if step.context_digest == digest:
                    self._cursor += offset + 1
                    return ProviderReply(text=step.reply)
            for step in self.steps[: self._cursor]:
                if step.context_digest == digest:
                    return ProviderReply(text=step.reply)
            divergent = (
                self.steps[self._cursor] if self._cursor < len(self.steps) else self.steps[-1]
            )
            raise FixtureMismatchError(
                f"context does not match fixture step {divergent.step} "
                f"(recorded prompt: {divergent.prompt[:80]!r})",
                step=divergent.step,
            )


class RecordingProvider:
    """Wraps a provider and captures every exchange for fixture authoring."""

    def __init__(self, inner: Provider):
        self._inner = inner
        self._lock = threading.Lock()
        self.exchanges: list[tuple[ConversationContext, str]] = []

    def complete(self, context: ConversationContext) -> ProviderReply:
        reply = self._inner.complete(context)
        with self._lock:
            self.exchanges.append((context, reply.text))
        return reply

    def document(self) -> str:
        with self._lock:
            return record_fixture(list(self.exchanges))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.document(), encoding="utf-8")
