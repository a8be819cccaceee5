"""Exception types shared across the package."""


class TddLoopError(Exception):
    """Base class for all package errors."""


class FeatureValidationError(TddLoopError, ValueError):
    """A feature specification violates its invariants."""


class SequencingError(TddLoopError):
    """An iteration record arrived with a non-consecutive index."""


class SessionLogError(TddLoopError):
    """A session log entry could not be parsed.

    ``line_no`` is the 1-based line in the log file.
    """

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class BudgetError(TddLoopError):
    """The assembled context exceeds the model's token budget."""


class TransportError(TddLoopError):
    """A network-level failure; safe to retry."""


class RequestError(TddLoopError):
    """A non-retryable provider request failure (auth, bad request)."""


class FixtureError(TddLoopError):
    """A replay fixture document is malformed."""


class FixtureMismatchError(FixtureError):
    """A replayed context diverged from the recorded fixture.

    ``step`` is the 1-based index of the first divergent fixture step.
    """

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class ScanError(TddLoopError):
    """A source document could not be lexically scanned.

    ``line_no`` is the 1-based offending line.
    """

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class AmbiguousBlocksError(TddLoopError):
    """A reply contained conflicting blocks of the same classification."""


class StateError(TddLoopError):
    """A decision or transition is not legal in the current state."""


class WorkspaceError(TddLoopError):
    """A workspace file could not be read or written."""
