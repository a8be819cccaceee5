"""Acceptance criteria for the orchestrator, one test per criterion.

Each test prints an `ACCEPTANCE PASS/FAIL: <criterion>` line (visible with
`pytest -s tests/test_acceptance.py`). All comparisons are exact unless a
criterion states a tolerance; the only tolerance here is the 10-second wall
clock on the bundled replay session.
"""

from __future__ import annotations

import random
import tempfile
import time
from contextlib import contextmanager
from pathlib import Path
from unittest import mock

import pytest

from support import ScriptedProvider, ScriptedRunner, canonical_session, reply_with_code, \
    simple_production_doc, simple_test_doc
from tddloop.engine import create_session, resume_fully_automated, run_fully_automated
from tddloop.feature import FeatureSpec, load_feature_file
from tddloop.integrator import BlockKind, extract_blocks, integrate, scan_source
from tddloop.metrics import compute_metrics, count_loc
from tddloop.prompts import (
    build_first_prompt,
    build_intermediate_prompt,
    build_refactor_prompt,
)
from tddloop.provider import ReplayProvider
from tddloop.session import (
    InteractionPattern,
    RunStatus,
    SessionLog,
    SessionStatus,
)


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL: {name}")
        raise
    print(f"ACCEPTANCE PASS: {name}")


# -- 1. prompt fidelity -------------------------------------------------------

def test_prompt_fidelity_golden_strings():
    with criterion("prompt fidelity (golden strings, zero tolerance)"):
        feature = FeatureSpec(
            description="Develop a class TextFormatter that centers words",
            inputs=(),
            expected_outputs=(),
        )
        first = build_first_prompt(feature)
        assert first == (
            "Use the Assertion First pattern in TDD and stubs and drivers to develop "
            "the first barely minimal test and production code for the feature "
            "Develop a class TextFormatter that centers words "
            "with input  and  and expected output "
        )
        assert build_intermediate_prompt() == (
            "Keep the existing tests and run the next iteration of TDD to develop "
            "the barely minimal test and production code"
        )
        assert build_refactor_prompt() == "Refactor the code."


# -- shared machinery for randomized engine runs ------------------------------

GOOD_REPLY = reply_with_code(simple_test_doc(), simple_production_doc())


def scripted_session(script: list[bool], max_iterations: int = 8):
    feature = FeatureSpec(description="loop exercise", expected_outputs=("True",))
    with tempfile.TemporaryDirectory() as tmp:
        log = SessionLog(Path(tmp) / "session.log")
        session = create_session(
            feature, InteractionPattern.FULLY_AUTOMATED, Path(tmp) / "ws", log
        )
        provider = ScriptedProvider([GOOD_REPLY])
        runner = ScriptedRunner(script)
        with mock.patch("tddloop.engine.run_tests", runner):
            session = run_fully_automated(
                session, provider, log, max_iterations=max_iterations
            )
        return session, provider


# -- 2. context strategy ------------------------------------------------------

def test_context_strategy_invariant_over_randomized_sequences():
    with criterion("context strategy: at most previous reply + new prompt (60 sequences)"):
        rng = random.Random(20240809)
        sequences = 0
        while sequences < 60:
            script = [rng.random() < 0.5 for _ in range(rng.randint(1, 25))]
            _, provider = scripted_session(script)
            assert provider.contexts, "session made no provider calls"
            for position, context in enumerate(provider.contexts):
                assert context.turns <= 2
                if position == 0:
                    assert context.previous_reply is None
                else:
                    assert context.previous_reply is not None
            sequences += 1


# -- 3. attempt cap -----------------------------------------------------------

def test_attempt_cap_over_randomized_failure_sequences():
    with criterion("attempt cap: never more than 5, exhaustion halts (80 sequences)"):
        rng = random.Random(97)
        exhaustion_seen = 0
        for _ in range(80):
            script = [rng.random() < 0.35 for _ in range(rng.randint(10, 30))]
            session, _ = scripted_session(script)
            assert all(record.attempts <= 5 for record in session.iterations)
            for record in session.iterations:
                if record.attempts == 5 and record.outcome.status is not RunStatus.PASSED:
                    assert session.status is SessionStatus.HALTED
                    assert record is session.iterations[-1]
                    exhaustion_seen += 1
        assert exhaustion_seen > 0, "randomization never produced an exhausted iteration"


# -- 4. bundled replay session ------------------------------------------------

def run_f1(tmp: Path, feature_path: Path, fixture_path: Path, log_name: str = "session.log"):
    log = SessionLog(tmp / log_name)
    session = create_session(
        load_feature_file(feature_path),
        InteractionPattern.FULLY_AUTOMATED,
        tmp / "ws",
        log,
    )
    return run_fully_automated(session, ReplayProvider.from_path(fixture_path), log), log


def test_bundled_replay_session_reproduces_reference_run(
    tmp_path, f1_feature_path, f1_fixture_path
):
    with criterion(
        "bundled replay run: Completed, 8 iterations, metrics 1/3/14/17, under 10s"
    ):
        started = time.monotonic()
        session, _ = run_f1(tmp_path, f1_feature_path, f1_fixture_path)
        elapsed = time.monotonic() - started
        assert session.status is SessionStatus.COMPLETED
        assert len(session.iterations) == 8
        metrics = compute_metrics(session.last_artifacts, session)
        assert metrics.test_functions == 1
        assert metrics.assertions == 3
        assert metrics.test_loc == 14
        assert metrics.code_loc == 17
        assert elapsed < 10.0, f"replay run took {elapsed:.2f}s"


# -- 5. metrics oracle --------------------------------------------------------

FUNCTION_ONLY = """\
from calc import add

def test_add():
    assert add(1, 2) == 3
    assert add(0, 0) == 0

def test_add_negative():
    assert add(-1, -2) == -3

def helper():
    return 41
"""

CLASS_BASED = """\
import unittest
from calc import Calculator

class TestCalculator(unittest.TestCase):
    def setUp(self):
        self.calc = Calculator()

    def test_multiply(self):
        self.assertEqual(self.calc.multiply(2, 3), 6)
        self.assertEqual(self.calc.multiply(0, 5), 0)

    def test_divide(self):
        self.assertAlmostEqual(self.calc.divide(1, 3), 0.3333, places=3)
        with self.assertRaises(ZeroDivisionError):
            self.calc.divide(1, 0)
"""

COMMENT_HEAVY = """\
# assert statements hide in comments like this one
from calc import add

def test_documented():
    # the next line is the real assertion
    assert add(2, 2) == 4  # assert trailing note
    message = "assert add(9, 9) == 18"
    return message

# def test_phantom(): lives only in this comment
"""

BLANK_HEAVY = (
    "\n\n"
    "def test_spaced():\n"
    "\n"
    "    value = 1\n"
    "\n\n"
    "    assert value == 1\n"
    "   \n\n"
    "def test_more_space():\n"
    "    assert True\n"
    "\n"
)

NESTED_AND_ASYNC = """\
import asyncio

def check(value):
    assert value

async def test_async_sleep():
    result = await asyncio.sleep(0, result=True)
    assert result is True

def test_with_nested():
    def inner():
        return 10
    assert inner() == 10
"""

DOCSTRING_TRAPS = """\
SNIPPET = '''
def test_phantom():
    assert False
'''

def test_real():
    \"\"\"Docstring with assert language inside.\"\"\"
    assert SNIPPET
"""

# Hand counts: (test functions, assertions in tests, non-blank LOC).
HAND_COUNTED = [
    ("function-only", FUNCTION_ONLY, 2, 3, 8),
    ("class-based", CLASS_BASED, 2, 4, 12),
    ("comment-heavy", COMMENT_HEAVY, 1, 1, 8),
    ("blank-line-heavy", BLANK_HEAVY, 2, 2, 5),
    ("nested-and-async", NESTED_AND_ASYNC, 2, 2, 10),
    ("docstring-traps", DOCSTRING_TRAPS, 1, 1, 7),
]


def test_metrics_match_hand_counts_exactly():
    with criterion("metrics oracle: six hand-counted fixtures, exact match"):
        for name, text, functions, assertions, loc in HAND_COUNTED:
            scan = scan_source(text)
            assert scan.test_function_count == functions, name
            assert scan.test_assertion_count == assertions, name
            assert count_loc(text) == loc, name


# -- 6. extraction totality ---------------------------------------------------

def fuzz_corpus(n: int = 1000) -> list[str]:
    rng = random.Random(1234)
    words = ["alpha", "beta", "`", "``", "def", "assert", "x", "~~~", "'''", '"""', "#", ""]
    fences = ["```", "````", "`````", "~~~", "~~~~", "```python", "```test", "~~~text"]
    replies = []
    for _ in range(n):
        lines = []
        for _ in range(rng.randint(0, 30)):
            roll = rng.random()
            if roll < 0.25:
                lines.append(rng.choice(fences))
            elif roll < 0.5:
                lines.append(" ".join(rng.choice(words) for _ in range(rng.randint(0, 8))))
            elif roll < 0.7:
                lines.append(f"def f{rng.randint(0, 9)}():")
            elif roll < 0.8:
                lines.append(f"    assert {rng.randint(0, 9)} == {rng.randint(0, 9)}")
            else:
                lines.append(chr(rng.randint(32, 0x2FA0)) * rng.randint(0, 12))
        replies.append("\n".join(lines))
    return replies


CLASS_SHAPE_REPLY = """\
Here is the implementation:

```python
class TextFormatter:
    def setLineWidth(self, width):
        self.width = width
```
"""

FUNCTION_SHAPE_REPLY = """\
Instead of a class, three standalone functions:

```python
def set_line_width(width):
    return width

def center_word(word, width):
    return word.center(width)

def center_two_words(a, b, width):
    return f"{a} {b}".center(width)
```
"""


def test_extraction_total_on_fuzz_corpus_and_classifies_reference_shapes():
    with criterion("extraction totality: 1,000 fuzz replies, reference shapes classified"):
        for reply in fuzz_corpus(1000):
            blocks = extract_blocks(reply)  # must never raise
            for block in blocks:
                assert block.body.strip()
                assert block.classification in (
                    BlockKind.TEST, BlockKind.PRODUCTION, BlockKind.UNKNOWN,
                )
        class_blocks = extract_blocks(CLASS_SHAPE_REPLY)
        assert [b.classification for b in class_blocks] == [BlockKind.PRODUCTION]
        function_blocks = extract_blocks(FUNCTION_SHAPE_REPLY)
        assert [b.classification for b in function_blocks] == [BlockKind.PRODUCTION]


# -- 7. crash recovery --------------------------------------------------------

class CrashAfter(SessionLog):
    def __init__(self, path, budget: int):
        super().__init__(path)
        self.budget = budget

    def append(self, event):
        if self.budget <= 0:
            raise KeyboardInterrupt("simulated crash")
        self.budget -= 1
        super().append(event)


def test_crash_recovery_at_every_event_boundary(
    tmp_path, f1_feature_path, f1_fixture_path
):
    with criterion("crash recovery: resume from every event boundary, identical state"):
        baseline, baseline_log = run_f1(tmp_path, f1_feature_path, f1_fixture_path)
        reference = canonical_session(baseline)
        total_events = len(baseline_log.read_lines())
        assert total_events > 40

        for boundary in range(1, total_events):
            root = tmp_path / f"boundary_{boundary}"
            root.mkdir()
            log = CrashAfter(root / "session.log", budget=boundary)
            session = create_session(
                load_feature_file(f1_feature_path),
                InteractionPattern.FULLY_AUTOMATED,
                root / "ws",
                log,
            )
            with pytest.raises(KeyboardInterrupt):
                run_fully_automated(
                    session, ReplayProvider.from_path(f1_fixture_path), log
                )
            resumed = resume_fully_automated(
                root / "session.log", ReplayProvider.from_path(f1_fixture_path)
            )
            assert canonical_session(resumed) == reference, f"boundary {boundary}"


# -- 8. test-weakening detection ----------------------------------------------

HONEST_TESTS = """\
import unittest
from formatter import Formatter

class TestFormatter(unittest.TestCase):
    def test_width(self):
        assert Formatter(10).width == 10

    def test_center_even(self):
        assert Formatter(10).center("ab") == "    ab    "

    def test_center_odd(self):
        assert Formatter(10).center("abc") == "   abc    "
"""

DODGING_TESTS = """\
import unittest
from formatter import Formatter

class TestFormatter(unittest.TestCase):
    def test_width(self):
        assert Formatter(10).width == 10

    def test_center_even(self):
        assert Formatter(10).center("ab") == "    ab    "
"""

GROWING_TESTS = HONEST_TESTS + """\

    def test_center_empty(self):
        assert Formatter(10).center("") == "          "
"""

PRODUCTION_DOC = """\
class Formatter:
    def __init__(self, width):
        self.width = width

    def center(self, word):
        return word.center(self.width)
"""


def test_weakening_detected_and_benign_growth_is_not():
    with criterion("test-weakening: dodge flagged, honest growth unflagged"):
        from support import make_artifacts

        workspace = make_artifacts(HONEST_TESTS, PRODUCTION_DOC)
        # Tests edited to dodge the failing case; production untouched.
        dodge = f"I corrected the tests:\n\n```python\n{DODGING_TESTS}```\n"
        _, report = integrate(workspace, extract_blocks(dodge))
        weakening = [w for w in report.warnings if w.kind == "test-weakening"]
        assert weakening, "dodging reply was not flagged"
        assert "decreased 3 -> 2" in weakening[0].detail

        benign = (
            f"Added a new edge case:\n\n```python\n{GROWING_TESTS}```\n"
            f"Production unchanged:\n\n```python\n{PRODUCTION_DOC}```\n"
        )
        _, report = integrate(workspace, extract_blocks(benign))
        assert not [w for w in report.warnings if w.kind == "test-weakening"]
