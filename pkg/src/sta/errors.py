"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class StaError(Exception):
    """Base class for all errors raised by this package."""


# -- language ---------------------------------------------------------------


class UnboundMacro(StaError):
    def __init__(self, name: str, line: int | None = None):
        self.name = name
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"unbound macro {{{name}}}{where}")


class StaSyntaxError(StaError):
    """Positioned parse failure. ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int, column: int = 1, text: str = "", expected: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.text = text
        self.expected = expected
        detail = f"line {line}, column {column}: {message}"
        if expected:
            detail += f" (expected {expected})"
        if text:
            detail += f"\n    {text}\n    {' ' * (column - 1)}^"
        super().__init__(detail)


class StaIndentationError(StaSyntaxError):
    pass


# -- compilation ------------------------------------------------------------


class ValidationError(StaError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class UnknownPrompt(ValidationError):
    def __init__(self, name: str, line: int | None = None):
        self.name = name
        super().__init__(f"unknown prompt {name!r}", line)


class UnknownState(ValidationError):
    def __init__(self, name: str, prompt: str, line: int | None = None):
        self.name = name
        self.prompt = prompt
        super().__init__(f"prompt {prompt!r} has no state {name!r}", line)


class UnknownFormat(ValidationError):
    def __init__(self, name: str, line: int | None = None):
        self.name = name
        super().__init__(f"unknown format {name!r}", line)


class UnsupportedFormatKind(ValidationError):
    def __init__(self, name: str, kind: str, line: int | None = None):
        self.name = name
        self.kind = kind
        super().__init__(f"format {name!r} derives from {kind!r} which cannot be declared yet", line)


class DuplicateName(ValidationError):
    def __init__(self, name: str, what: str, line: int | None = None):
        self.name = name
        super().__init__(f"duplicate {what} {name!r}", line)


class UnknownTemplateSlot(ValidationError):
    def __init__(self, slot: str, line: int | None = None):
        self.slot = slot
        super().__init__(f"unknown header template slot {{{slot}}}", line)


# -- language models --------------------------------------------------------


class CapabilityError(StaError):
    pass


class EmptyCandidate(StaError):
    pass


class BackendError(StaError):
    """Transport or API failure. ``attempts`` counts tries made before giving up."""

    def __init__(self, message: str, attempts: int = 1, status: int | None = None, retryable: bool = False):
        self.attempts = attempts
        self.status = status
        self.retryable = retryable
        super().__init__(f"{message} (after {attempts} attempt{'s' if attempts != 1 else ''})")


# -- runtime ----------------------------------------------------------------


class RuntimeFailure(StaError):
    """Base for errors raised while executing a program.

    ``trace`` is attached by the engine so callers can inspect or persist the
    partial execution.
    """

    trace = None


class MissingInput(RuntimeFailure):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing input {name!r}")


class TripLimitDeadlock(RuntimeFailure):
    def __init__(self, prompt: str):
        self.prompt = prompt
        super().__init__(f"every branch leaving {prompt!r} has reached its trip limit")


class UnresolvedSource(RuntimeFailure):
    pass


class CountOverflow(RuntimeFailure):
    pass


class ScheduleGap(RuntimeFailure):
    pass


class ChannelTypeError(RuntimeFailure):
    pass


class NonConformantLine(RuntimeFailure):
    def __init__(self, lineno: int, line: str, expected: list[str] | None = None):
        self.lineno = lineno
        self.line = line
        self.expected = expected or []
        msg = f"line {lineno} does not conform to the questionnaire: {line!r}"
        if self.expected:
            msg += f"; expected one of {self.expected}"
        super().__init__(msg)


class UnknownCallee(RuntimeFailure):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no callable registered as {name!r}")


class CalleeFailure(RuntimeFailure):
    def __init__(self, name: str, cause: BaseException):
        self.name = name
        self.cause = cause
        super().__init__(f"call to {name!r} failed: {cause!r}")


class TraceError(StaError):
    pass


class SchemaVersionMismatch(TraceError):
    pass


class ProgramMismatch(TraceError):
    pass


class ReplayDivergence(TraceError):
    def __init__(self, event_index: int, reason: str):
        self.event_index = event_index
        self.reason = reason
        super().__init__(f"replay diverged at event {event_index}: {reason}")
