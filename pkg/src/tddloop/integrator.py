"""Extracts code from model replies and folds it into the workspace.

A reply is arbitrary chat text; fenced code blocks are pulled out in order,
classified as test or production code, and written as whole-document
replacements. Replies that quietly shrink the test suite are flagged: a
model under pressure to make tests pass will sometimes edit the tests to
dodge the failure instead of fixing the code.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import AmbiguousBlocksError, ScanError, WorkspaceError
from .session import CodeArtifacts, SourceDocument

DEFAULT_TEST_NAME_PREFIX = "test"

_FENCE_RE = re.compile(r"^\s*(`{3,}|~{3,})\s*(.*)$")
_DEF_RE = re.compile(r"^(\s*)(?:async\s+)?def\s+([A-Za-z_]\w*)\s*\(")
_DEF_PREFIX_RE = re.compile(r"^\s*(?:async\s+)?def\b")
_CLASS_RE = re.compile(r"^\s*class\s+[A-Za-z_]\w*")
_ASSERT_STMT_RE = re.compile(r"^\s*assert\b")
_ASSERT_CALL_RE = re.compile(r"\bself\s*\.\s*assert[A-Za-z_]\w*\s*\(")
_TEST_WORD_RE = re.compile(r"(?i)\btest")


class BlockKind(str, Enum):
    TEST = "test"
    PRODUCTION = "production"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ExtractedBlock:
    body: str
    fence_info: str | None
    classification: BlockKind


@dataclass(frozen=True)
class IntegrationWarning:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


@dataclass(frozen=True)
class IntegrationReport:
    updated: frozenset[str]
    warnings: tuple[IntegrationWarning, ...]
    previous_test_function_count: int
    new_test_function_count: int


def _skeleton_lines(text: str) -> list[str]:
    """Source lines with string-literal contents and comments blanked."""
    out_lines: list[str] = []
    in_triple: str | None = None
    for line in text.splitlines():
        out: list[str] = []
        i, n = 0, len(line)
        while i < n:
            if in_triple:
                end = line.find(in_triple, i)
                if end == -1:
                    i = n
                else:
                    i = end + 3
                    in_triple = None
                continue
            ch = line[i]
            if ch == "#":
                break
            if ch in "\"'":
                if line.startswith(ch * 3, i):
                    in_triple = ch * 3
                    i += 3
                    continue
                j = i + 1
                while j < n:
                    if line[j] == "\\":
                        j += 2
                        continue
                    if line[j] == ch:
                        break
                    j += 1
                i = min(j + 1, n)
                continue
            out.append(ch)
            i += 1
        out_lines.append("".join(out))
    return out_lines


@dataclass(frozen=True)
class SourceScan:
    function_names: tuple[str, ...]
    test_function_count: int
    assertion_line_count: int
    test_assertion_count: int
    assertion_lines: tuple[str, ...]
    has_class: bool


def scan_source(
    text: str,
    test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX,
    strict: bool = True,
) -> SourceScan:
    """Lexically scan a Python document for defs and assertion lines.

    ``strict`` raises ScanError (with the line number) on a ``def`` line
    whose name cannot be read; classification uses the lenient mode so
    arbitrary reply text never fails extraction.
    """
    originals = text.splitlines()
    functions: list[str] = []
    assertion_lines: list[str] = []
    test_assertions = 0
    has_class = False
    stack: list[tuple[int, bool]] = []  # (indent, function name has the test prefix)

    for line_no, skeleton in enumerate(_skeleton_lines(text), start=1):
        if not skeleton.strip():
            continue
        expanded = skeleton.expandtabs(8)
        indent = len(expanded) - len(expanded.lstrip())
        while stack and indent <= stack[-1][0]:
            stack.pop()

        if _CLASS_RE.match(skeleton):
            has_class = True
            continue
        if _DEF_PREFIX_RE.match(skeleton):
            match = _DEF_RE.match(skeleton)
            if not match:
                if strict:
                    raise ScanError(f"line {line_no}: unreadable function definition", line_no)
                continue
            name = match.group(2)
            functions.append(name)
            stack.append((indent, name.startswith(test_name_prefix)))
            continue
        if _ASSERT_STMT_RE.match(skeleton) or _ASSERT_CALL_RE.search(skeleton):
            assertion_lines.append(originals[line_no - 1].strip())
            if any(in_test for _, in_test in stack):
                test_assertions += 1

    return SourceScan(
        function_names=tuple(functions),
        test_function_count=sum(1 for n in functions if n.startswith(test_name_prefix)),
        assertion_line_count=len(assertion_lines),
        test_assertion_count=test_assertions,
        assertion_lines=tuple(assertion_lines),
        has_class=has_class,
    )


def count_test_functions(document: str, test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX) -> int:
    """Number of function definitions whose name starts with the test prefix."""
    return scan_source(document, test_name_prefix).test_function_count


def count_assertions(document: str, test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX) -> int:
    """Number of assertion lines lexically inside test-prefixed functions."""
    return scan_source(document, test_name_prefix).test_assertion_count


def classify_block(
    body: str,
    fence_info: str | None,
    preceding_prose: str,
    test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX,
) -> BlockKind:
    """Decide whether a block is test code, production code, or neither.

    Priority: an explicit "test" label on the fence or the prose line above
    it wins; then assertion-bearing blocks with test-prefixed functions;
    then assertion-free definitions count as production code.
    """
    if _TEST_WORD_RE.search(fence_info or "") or _TEST_WORD_RE.search(preceding_prose):
        return BlockKind.TEST
    scan = scan_source(body, test_name_prefix, strict=False)
    if scan.assertion_line_count >= 1 and scan.test_function_count >= 1:
        return BlockKind.TEST
    if (scan.function_names or scan.has_class) and scan.assertion_line_count == 0:
        return BlockKind.PRODUCTION
    return BlockKind.UNKNOWN


def extract_blocks(
    reply: str, test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX
) -> list[ExtractedBlock]:
    """Pull every fenced code block out of a reply, in order.

    Never fails: an unterminated fence extends to the end of the reply, and
    prose-only replies yield an empty list.
    """
    blocks: list[ExtractedBlock] = []
    lines = reply.splitlines()
    i = 0
    preceding_prose = ""
    while i < len(lines):
        opening = _FENCE_RE.match(lines[i])
        if not opening:
            if lines[i].strip():
                preceding_prose = lines[i]
            i += 1
            continue
        fence = opening.group(1)
        info = opening.group(2).strip() or None
        body_lines: list[str] = []
        i += 1
        while i < len(lines):
            closing = _FENCE_RE.match(lines[i])
            if (
                closing
                and closing.group(1)[0] == fence[0]
                and len(closing.group(1)) >= len(fence)
                and not closing.group(2).strip()
            ):
                i += 1
                break
            body_lines.append(lines[i])
            i += 1
        body = "\n".join(body_lines)
        if body.strip():
            blocks.append(
                ExtractedBlock(
                    body=body,
                    fence_info=info,
                    classification=classify_block(body, info, preceding_prose, test_name_prefix),
                )
            )
        preceding_prose = ""
    return blocks


def _unique_bodies(blocks: list[ExtractedBlock]) -> list[str]:
    bodies: list[str] = []
    for block in blocks:
        if block.body not in bodies:
            bodies.append(block.body)
    return bodies


def integrate(
    workspace: CodeArtifacts,
    blocks: list[ExtractedBlock],
    test_name_prefix: str = DEFAULT_TEST_NAME_PREFIX,
    allowed: frozenset[BlockKind] = frozenset({BlockKind.TEST, BlockKind.PRODUCTION}),
) -> tuple[CodeArtifacts, IntegrationReport]:
    """Replace workspace documents with the classified blocks.

    Test blocks replace the test document, production blocks the production
    document; a document without a matching block is preserved. Two
    conflicting blocks of one classification raise AmbiguousBlocksError.
    """
    warnings: list[IntegrationWarning] = []
    test_bodies = _unique_bodies(
        [b for b in blocks if b.classification is BlockKind.TEST and BlockKind.TEST in allowed]
    )
    production_bodies = _unique_bodies(
        [
            b
            for b in blocks
            if b.classification is BlockKind.PRODUCTION and BlockKind.PRODUCTION in allowed
        ]
    )
    if len(test_bodies) > 1:
        raise AmbiguousBlocksError("reply contains conflicting test documents")
    if len(production_bodies) > 1:
        raise AmbiguousBlocksError("reply contains conflicting production documents")

    for block in blocks:
        if block.classification is BlockKind.UNKNOWN:
            head = block.body.strip().splitlines()[0][:60]
            warnings.append(
                IntegrationWarning("unclassified-block", f"block starting {head!r} was not integrated")
            )
        elif block.classification not in allowed:
            warnings.append(
                IntegrationWarning(
                    "ignored-block",
                    f"{block.classification.value} block ignored in this interaction pattern",
                )
            )

    updated: set[str] = set()
    new_artifacts = workspace
    if test_bodies:
        new_artifacts = new_artifacts.with_test(test_bodies[0])
        updated.add("test")
    if production_bodies:
        new_artifacts = new_artifacts.with_production(production_bodies[0])
        updated.add("production")

    previous_scan = scan_source(workspace.test.text, test_name_prefix)
    new_scan = scan_source(new_artifacts.test.text, test_name_prefix)
    production_unchanged = new_artifacts.production.text == workspace.production.text

    if new_scan.test_function_count < previous_scan.test_function_count:
        warnings.append(
            IntegrationWarning(
                "test-weakening",
                f"test function count decreased {previous_scan.test_function_count} -> "
                f"{new_scan.test_function_count}",
            )
        )
    elif production_unchanged and "test" in updated:
        missing = [
            line for line in previous_scan.assertion_lines if line not in set(new_scan.assertion_lines)
        ]
        if missing:
            warnings.append(
                IntegrationWarning(
                    "test-weakening",
                    f"assertion removed while production code is unchanged: {missing[0]!r}",
                )
            )

    report = IntegrationReport(
        updated=frozenset(updated),
        warnings=tuple(warnings),
        previous_test_function_count=previous_scan.test_function_count,
        new_test_function_count=new_scan.test_function_count,
    )
    return new_artifacts, report


def _atomic_write(path: Path, text: str) -> None:
    if text and not text.endswith("\n"):
        text += "\n"
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except OSError as exc:
        raise WorkspaceError(f"cannot write {path}: {exc}") from exc
    finally:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)


def write_workspace(workspace_dir: str | Path, artifacts: CodeArtifacts) -> None:
    """Write both documents, each as a single atomic replace."""
    directory = Path(workspace_dir)
    directory.mkdir(parents=True, exist_ok=True)
    _atomic_write(directory / artifacts.test.filename, artifacts.test.text)
    _atomic_write(directory / artifacts.production.filename, artifacts.production.text)


def read_workspace(
    workspace_dir: str | Path, test_filename: str, production_filename: str
) -> CodeArtifacts:
    """Read both documents; a missing file reads as an empty document."""
    directory = Path(workspace_dir)

    def read_one(name: str) -> str:
        path = directory / name
        if not path.exists():
            return ""
        try:
            return path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise WorkspaceError(f"cannot read {path}: {exc}") from exc

    return CodeArtifacts(
        test=SourceDocument(test_filename, read_one(test_filename)),
        production=SourceDocument(production_filename, read_one(production_filename)),
    )
