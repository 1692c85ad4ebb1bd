"""Diagnostics: frontend errors and verification errors."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .source import SourceSpan


class FrontendError(Exception):
    """Base for errors raised before verification starts (exit code 2)."""

    def __init__(self, span: SourceSpan, message: str) -> None:
        super().__init__(f"{span}: {message}")
        self.span = span
        self.message = message


class LexError(FrontendError):
    pass


class ParseError(FrontendError):
    def __init__(self, span: SourceSpan, expected: str, found: str) -> None:
        super().__init__(span, f"expected {expected}, found {found}")
        self.expected = expected
        self.found = found


class TypecheckError(FrontendError):
    pass


class SpecError(FrontendError):
    pass


class SolverUnavailable(Exception):
    """The SMT solver executable could not be started (exit code 3)."""


class Reason(Enum):
    """Why a verification obligation failed, at the source level."""

    INSUFFICIENT_PERMISSION = "InsufficientPermission"
    ASSERTION_UNKNOWN = "AssertionUnknown"
    PRECONDITION_FAILED = "PreconditionFailed"
    POSTCONDITION_FAILED = "PostconditionFailed"
    INVARIANT_ENTRY_FAILED = "InvariantFailed(entry)"
    INVARIANT_PRESERVED_FAILED = "InvariantFailed(preserved)"
    FOLD_FAILED = "FoldFailed"
    UNFOLD_FAILED = "UnfoldFailed"
    TYPE_ASSERTION_UNSAFE = "TypeAssertionUnsafe"
    CALL_UNSAFE = "CallUnsafe"

    def __str__(self) -> str:
        return self.value


REASONS_BY_NAME = {r.value: r for r in Reason}


@dataclass(frozen=True)
class VerificationError:
    """A single failed obligation, tied back to the annotated source."""

    span: SourceSpan
    reason: Reason
    failing_assertion: str
    detail: str = ""

    def sort_key(self) -> tuple:
        s = self.span
        return (s.file, s.start_line, s.start_col, self.reason.value, self.failing_assertion)

    def __str__(self) -> str:
        msg = f"{self.span}: {self.reason}: {self.failing_assertion}"
        if self.detail:
            msg += f" ({self.detail})"
        return msg


class VerifyFailure(Exception):
    """Internal control flow: aborts the current execution path with an error."""

    def __init__(self, error: VerificationError) -> None:
        super().__init__(str(error))
        self.error = error


@dataclass
class Verdict:
    """Outcome of verifying one member."""

    member: str
    errors: list[VerificationError]
    obligations: int = 0
    duration: float = 0.0

    @property
    def verified(self) -> bool:
        return not self.errors
