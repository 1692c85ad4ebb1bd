"""Tokenizer for annotated MiniGo source.

Specification keywords are first-class token kinds, math glyphs have ASCII
aliases, and semicolons are inserted at newlines after statement-ending
tokens (the subset of Go's rule needed for the supported statement forms).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .errors import LexError
from .source import SourceSpan


class T(Enum):
    IDENT = auto()
    INT = auto()
    STRING = auto()
    EOF = auto()

    # keywords
    PACKAGE = auto(); IMPORT = auto(); TYPE = auto(); STRUCT = auto()
    INTERFACE = auto(); FUNC = auto(); RETURN = auto(); IF = auto()
    ELSE = auto(); FOR = auto(); GO = auto(); VAR = auto(); MAKE = auto()
    CHAN = auto(); TRUE = auto(); FALSE = auto(); LEN = auto(); SEQ = auto()

    # specification keywords
    REQUIRES = auto(); ENSURES = auto(); INVARIANT = auto(); PRED = auto()
    PURE = auto(); GHOST = auto(); FOLD = auto(); UNFOLD = auto()
    UNFOLDING = auto(); IN = auto(); ACC = auto(); OLD = auto()
    IMPLEMENTS = auto(); FORALL = auto(); ASSERT = auto(); TYPEOF = auto()

    # punctuation and operators
    LPAREN = auto(); RPAREN = auto(); LBRACKET = auto(); RBRACKET = auto()
    LBRACE = auto(); RBRACE = auto(); COMMA = auto(); SEMI = auto()
    COLON = auto(); DCOLON = auto(); DOT = auto(); QUESTION = auto()
    AT = auto(); UNDERSCORE = auto()
    ASSIGN = auto(); DEFINE = auto()
    PLUS = auto(); MINUS = auto(); STAR = auto(); SLASH = auto(); PERCENT = auto()
    PLUSPLUS = auto(); MINUSMINUS = auto(); PLUSEQ = auto(); MINUSEQ = auto()
    EQ = auto(); NE = auto(); LT = auto(); LE = auto(); GT = auto(); GE = auto()
    AND = auto(); OR = auto(); NOT = auto(); AMP = auto()
    IMPLIES = auto(); LARROW = auto()


KEYWORDS: dict[str, T] = {
    "package": T.PACKAGE, "import": T.IMPORT, "type": T.TYPE,
    "struct": T.STRUCT, "interface": T.INTERFACE, "func": T.FUNC,
    "return": T.RETURN, "if": T.IF, "else": T.ELSE, "for": T.FOR,
    "go": T.GO, "var": T.VAR, "make": T.MAKE, "chan": T.CHAN,
    "true": T.TRUE, "false": T.FALSE, "len": T.LEN, "seq": T.SEQ,
    "requires": T.REQUIRES, "ensures": T.ENSURES, "invariant": T.INVARIANT,
    "pred": T.PRED, "pure": T.PURE, "ghost": T.GHOST, "fold": T.FOLD,
    "unfold": T.UNFOLD, "unfolding": T.UNFOLDING, "in": T.IN, "acc": T.ACC,
    "old": T.OLD, "implements": T.IMPLEMENTS, "forall": T.FORALL,
    "assert": T.ASSERT, "typeOf": T.TYPEOF,
}

# Unicode aliases for math glyphs.
GLYPHS: dict[str, T] = {
    "∀": T.FORALL,   # ∀
    "≤": T.LE,       # ≤
    "≥": T.GE,       # ≥
    "≠": T.NE,       # ≠
    "⟹": T.IMPLIES,  # ⟹
    "⇒": T.IMPLIES,  # ⇒
}

# A newline after one of these kinds inserts an implicit semicolon.
_ASI_ENDERS = frozenset({
    T.IDENT, T.INT, T.STRING, T.TRUE, T.FALSE, T.RETURN, T.UNDERSCORE,
    T.RPAREN, T.RBRACKET, T.RBRACE, T.PLUSPLUS, T.MINUSMINUS,
})

_TWO_CHAR = {
    ":=": T.DEFINE, "==": T.EQ, "!=": T.NE, "<=": T.LE, ">=": T.GE,
    "&&": T.AND, "||": T.OR, "++": T.PLUSPLUS, "--": T.MINUSMINUS,
    "+=": T.PLUSEQ, "-=": T.MINUSEQ, "::": T.DCOLON, "<-": T.LARROW,
}

_ONE_CHAR = {
    "(": T.LPAREN, ")": T.RPAREN, "[": T.LBRACKET, "]": T.RBRACKET,
    "{": T.LBRACE, "}": T.RBRACE, ",": T.COMMA, ";": T.SEMI, ":": T.COLON,
    ".": T.DOT, "?": T.QUESTION, "@": T.AT, "=": T.ASSIGN, "+": T.PLUS,
    "-": T.MINUS, "*": T.STAR, "/": T.SLASH, "%": T.PERCENT, "<": T.LT,
    ">": T.GT, "!": T.NOT, "&": T.AMP,
}


@dataclass(frozen=True)
class Token:
    kind: T
    text: str
    span: SourceSpan

    def __repr__(self) -> str:
        return f"Token({self.kind.name}, {self.text!r})"


class Lexer:
    def __init__(self, source: str, filename: str = "<input>") -> None:
        self.src = source
        self.file = filename
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []

    # ── character access ─────────────────────────────────────────

    def _peek(self, offset: int = 0) -> str:
        idx = self.pos + offset
        return self.src[idx] if idx < len(self.src) else ""

    def _advance(self) -> str:
        c = self.src[self.pos]
        self.pos += 1
        if c == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return c

    def _here(self) -> tuple[int, int]:
        return self.line, self.col

    def _span(self, start: tuple[int, int]) -> SourceSpan:
        return SourceSpan(self.file, start[0], start[1], self.line, self.col)

    def _emit(self, kind: T, text: str, start: tuple[int, int]) -> None:
        self.tokens.append(Token(kind, text, self._span(start)))

    # ── main loop ────────────────────────────────────────────────

    def run(self) -> list[Token]:
        while self.pos < len(self.src):
            c = self._peek()
            if c == "\n":
                self._insert_semi()
                self._advance()
                continue
            if c in " \t\r":
                self._advance()
                continue
            if c == "/" and self._peek(1) == "/":
                while self.pos < len(self.src) and self._peek() != "\n":
                    self._advance()
                continue
            start = self._here()
            if c.isdigit():
                self._lex_int(start)
            elif c.isalpha() or c == "_":
                self._lex_word(start)
            elif c == '"':
                self._lex_string(start)
            elif c in GLYPHS:
                self._advance()
                self._emit(GLYPHS[c], c, start)
            else:
                two = self.src[self.pos:self.pos + 2]
                if two in _TWO_CHAR:
                    # ==> is IMPLIES, not EQ followed by '>'
                    if two == "==" and self._peek(2) == ">":
                        self._advance(); self._advance(); self._advance()
                        self._emit(T.IMPLIES, "==>", start)
                        continue
                    self._advance(); self._advance()
                    self._emit(_TWO_CHAR[two], two, start)
                elif c in _ONE_CHAR:
                    self._advance()
                    self._emit(_ONE_CHAR[c], c, start)
                else:
                    span = SourceSpan(self.file, start[0], start[1], start[0], start[1] + 1)
                    raise LexError(span, f"illegal character {c!r}")
        self._insert_semi()
        end = self._here()
        self._emit(T.EOF, "", end)
        return self.tokens

    def _insert_semi(self) -> None:
        if self.tokens and self.tokens[-1].kind in _ASI_ENDERS:
            start = self._here()
            self._emit(T.SEMI, ";", start)

    def _lex_int(self, start: tuple[int, int]) -> None:
        text = ""
        while self._peek().isdigit():
            text += self._advance()
        self._emit(T.INT, text, start)

    def _lex_word(self, start: tuple[int, int]) -> None:
        text = ""
        while self._peek().isalnum() or self._peek() == "_":
            text += self._advance()
        if text == "_":
            self._emit(T.UNDERSCORE, text, start)
        else:
            self._emit(KEYWORDS.get(text, T.IDENT), text, start)

    def _lex_string(self, start: tuple[int, int]) -> None:
        self._advance()
        text = ""
        while True:
            if self.pos >= len(self.src) or self._peek() == "\n":
                raise LexError(self._span(start), "unterminated string literal")
            c = self._advance()
            if c == '"':
                break
            text += c
        self._emit(T.STRING, text, start)


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    """Tokenize annotated MiniGo source, including the trailing EOF token."""
    return Lexer(source, filename).run()
