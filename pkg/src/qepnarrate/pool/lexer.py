from __future__ import annotations

from dataclasses import dataclass

from ..errors import LexError

KEYWORDS = frozenset({
    "CREATE", "POPERATOR", "FOR", "SELECT", "FROM", "WHERE", "LIKE",
    "COMPOSE", "USING", "UPDATE", "SET", "REPLACE", "AS", "NULL",
})
PUNCT = frozenset("=,().*;")


@dataclass(frozen=True)
class Token:
    kind: str  # kw | ident | str | op | eof
    value: str
    pos: int = 0

    def __repr__(self):
        return f"{self.kind} {self.value}"


def tokenize(text: str) -> list[Token]:
    """Split POOL source into tokens.

    Keywords are upper-cased, identifiers lower-cased, string literals
    kept as written (``''`` escapes a quote).
    """
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "-" and text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
        elif ch == "'":
            start = i
            i += 1
            buf = []
            while True:
                if i >= n:
                    raise LexError(start, text[start:start + 20], "unterminated string")
                if text[i] == "'":
                    if i + 1 < n and text[i + 1] == "'":
                        buf.append("'")
                        i += 2
                        continue
                    i += 1
                    break
                buf.append(text[i])
                i += 1
            tokens.append(Token("str", "".join(buf), start))
        elif ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            if word.upper() in KEYWORDS:
                tokens.append(Token("kw", word.upper(), start))
            else:
                tokens.append(Token("ident", word.lower(), start))
        elif ch in PUNCT:
            tokens.append(Token("op", ch, i))
            i += 1
        else:
            raise LexError(i, text[i:i + 20])
    return tokens
