"""Provider gateway: budgeting, live transport behavior, record/replay."""

import http.server
import json
import socket
import threading

import httpx
import pytest

from tddloop.errors import (
    BudgetError,
    FixtureError,
    FixtureMismatchError,
    RequestError,
    TransportError,
)
from tddloop.prompts import assemble_context
from tddloop.provider import (
    LiveProvider,
    ModelConfig,
    RecordingProvider,
    ReplayProvider,
    context_digest,
    estimate_context_tokens,
    estimate_tokens,
    parse_fixture,
    record_fixture,
)


class TestTokenEstimate:
    @pytest.mark.parametrize(
        "text,expected", [("", 0), ("abc", 1), ("abcd", 1), ("abcde", 2), ("x" * 17, 5)]
    )
    def test_characters_over_four_rounded_up(self, text, expected):
        assert estimate_tokens(text) == expected

    def test_same_context_same_estimate(self):
        context = assemble_context("reply", "prompt")
        assert estimate_context_tokens(context) == estimate_context_tokens(context)

    def test_model_config_invariants(self):
        with pytest.raises(ValueError):
            ModelConfig(max_context_tokens=0)
        with pytest.raises(ValueError):
            ModelConfig(temperature=2.5)


def make_exchanges(n: int):
    exchanges = []
    previous = None
    for step in range(1, n + 1):
        context = assemble_context(previous, f"prompt {step}")
        reply = f"reply {step}"
        exchanges.append((context, reply))
        previous = reply
    return exchanges


class TestFixture:
    def test_record_then_replay_eight_exchanges(self):
        exchanges = make_exchanges(8)
        provider = ReplayProvider(parse_fixture(record_fixture(exchanges)))
        replies = [provider.complete(ctx).text for ctx, _ in exchanges]
        assert replies == [reply for _, reply in exchanges]

    def test_replay_reply_is_byte_exact(self):
        exchanges = make_exchanges(3)
        provider = ReplayProvider(parse_fixture(record_fixture(exchanges)))
        for context, recorded in exchanges:
            assert provider.complete(context).text == recorded

    def test_altered_prompt_fails_at_step_two(self):
        exchanges = make_exchanges(3)
        provider = ReplayProvider(parse_fixture(record_fixture(exchanges)))
        provider.complete(exchanges[0][0])
        with pytest.raises(FixtureMismatchError) as err:
            provider.complete(assemble_context("reply 1", "tampered prompt"))
        assert err.value.step == 2

    def test_empty_exchange_list_rejected(self):
        with pytest.raises(FixtureError):
            record_fixture([])

    def test_duplicate_step_index_rejected(self):
        document = record_fixture(make_exchanges(2))
        first_line = document.splitlines()[0]
        with pytest.raises(FixtureError):
            parse_fixture(document + first_line + "\n")

    def test_replay_is_pure_function_of_fixture_and_context(self):
        exchanges = make_exchanges(4)
        document = record_fixture(exchanges)
        first = ReplayProvider(parse_fixture(document))
        second = ReplayProvider(parse_fixture(document))
        for context, _ in exchanges:
            assert first.complete(context).text == second.complete(context).text

    def test_consumed_step_still_answers_matching_context(self):
        # A resumed session may re-ask an earlier question.
        exchanges = make_exchanges(3)
        provider = ReplayProvider(parse_fixture(record_fixture(exchanges)))
        for context, _ in exchanges:
            provider.complete(context)
        assert provider.complete(exchanges[1][0]).text == "reply 2"

    def test_recording_provider_round_trip(self):
        class Echo:
            def complete(self, context):
                from tddloop.provider import ProviderReply

                return ProviderReply(text=f"echo: {context.new_prompt}")

        recorder = RecordingProvider(Echo())
        contexts = [assemble_context(None, "one"), assemble_context("echo: one", "two")]
        for context in contexts:
            recorder.complete(context)
        replay = ReplayProvider(parse_fixture(recorder.document()))
        assert replay.complete(contexts[0]).text == "echo: one"
        assert replay.complete(contexts[1]).text == "echo: two"

    def test_context_digest_depends_on_both_parts(self):
        a = context_digest(assemble_context(None, "p"))
        b = context_digest(assemble_context("r", "p"))
        c = context_digest(assemble_context("r", "q"))
        assert len({a, b, c}) == 3


class TestBudgetGuard:
    def test_oversized_context_raises_before_any_request(self):
        calls = []

        def handler(request):
            calls.append(request)
            return httpx.Response(200, json={})

        provider = LiveProvider(
            ModelConfig(api_key="k", max_context_tokens=10),
            transport=httpx.MockTransport(handler),
        )
        with pytest.raises(BudgetError):
            provider.complete(assemble_context(None, "x" * 100))
        assert calls == []

    def test_replay_provider_honors_budget(self):
        provider = ReplayProvider(
            parse_fixture(record_fixture(make_exchanges(1))),
            config=ModelConfig(max_context_tokens=4),
        )
        with pytest.raises(BudgetError):
            provider.complete(assemble_context(None, "a much too long prompt"))


class _CannedHandler(http.server.BaseHTTPRequestHandler):
    canned_text = "stub server says hello"

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        body = json.dumps(
            {
                "choices": [{"message": {"role": "assistant", "content": self.canned_text}}],
                "usage": {"prompt_tokens": 7, "completion_tokens": 5},
            }
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


class TestLiveProvider:
    def test_live_provider_against_local_stub_server(self):
        server = http.server.HTTPServer(("127.0.0.1", 0), _CannedHandler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            port = server.server_address[1]
            provider = LiveProvider(
                ModelConfig(api_key="k", base_url=f"http://127.0.0.1:{port}/v1")
            )
            reply = provider.complete(assemble_context(None, "hello"))
            assert reply.text == _CannedHandler.canned_text
            assert reply.prompt_tokens == 7
        finally:
            server.shutdown()
            thread.join(timeout=5)

    def test_http_4xx_is_not_retried(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            return httpx.Response(401, text="bad key")

        provider = LiveProvider(
            ModelConfig(api_key="k"), transport=httpx.MockTransport(handler)
        )
        with pytest.raises(RequestError):
            provider.complete(assemble_context(None, "p"))
        assert len(attempts) == 1

    def test_transport_failures_retry_with_backoff(self):
        attempts = []
        delays = []

        def handler(request):
            attempts.append(1)
            raise httpx.ConnectError("refused")

        provider = LiveProvider(
            ModelConfig(api_key="k"),
            transport=httpx.MockTransport(handler),
            sleep=delays.append,
        )
        with pytest.raises(TransportError):
            provider.complete(assemble_context(None, "p"))
        assert len(attempts) == 4  # initial call + 3 retries
        assert delays == [1.0, 2.0, 4.0]

    def test_5xx_retries_then_succeeds(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            if len(attempts) < 3:
                return httpx.Response(503, text="busy")
            return httpx.Response(
                200,
                json={"choices": [{"message": {"content": "recovered"}}]},
            )

        provider = LiveProvider(
            ModelConfig(api_key="k"),
            transport=httpx.MockTransport(handler),
            sleep=lambda _: None,
        )
        assert provider.complete(assemble_context(None, "p")).text == "recovered"

    def test_missing_api_key_rejected(self):
        provider = LiveProvider(ModelConfig(), transport=httpx.MockTransport(lambda r: None))
        with pytest.raises(RequestError):
            provider.complete(assemble_context(None, "p"))


class TestNoNetworkProperty:
    def test_replay_provider_never_opens_a_socket(self, monkeypatch):
        def bomb(*args, **kwargs):
            raise AssertionError("socket opened during replay")

        monkeypatch.setattr(socket, "socket", bomb)
        monkeypatch.setattr(socket, "create_connection", bomb)
        exchanges = make_exchanges(5)
        provider = ReplayProvider(parse_fixture(record_fixture(exchanges)))
        for context, reply in exchanges:
            assert provider.complete(context).text == reply
