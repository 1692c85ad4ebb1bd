"""Source positions and diagnostic excerpts."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """A half-open region of a source file, with 1-based line/column positions."""

    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self) -> None:
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"inverted span {self}")

    def to(self, other: SourceSpan) -> SourceSpan:
        """The smallest span covering self and other (same file)."""
        return SourceSpan(
            self.file,
            self.start_line, self.start_col,
            other.end_line, other.end_col,
        )

    def contains(self, other: SourceSpan) -> bool:
        return (
            (self.start_line, self.start_col) <= (other.start_line, other.start_col)
            and (other.end_line, other.end_col) <= (self.end_line, self.end_col)
        )

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


def excerpt(text: str, span: SourceSpan) -> str:
    """The source line of span's start, with a caret marker underneath."""
    lines = text.splitlines()
    if not (1 <= span.start_line <= len(lines)):
        return ""
    line = lines[span.start_line - 1]
    caret_col = max(span.start_col - 1, 0)
    width = 1
    if span.end_line == span.start_line:
        width = max(span.end_col - span.start_col, 1)
    marker = " " * caret_col + "^" * min(width, max(len(line) - caret_col, 1))
    return f"{line}\n{marker}"
