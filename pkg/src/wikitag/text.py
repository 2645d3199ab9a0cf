"""Tokenization and anchor normalization shared by ingest, indexing and spotting."""
from __future__ import annotations

import re
from dataclasses import dataclass

# Maximal runs of Unicode letters/digits; underscore is excluded on purpose.
TOKEN_RE = re.compile(r"[^\W_]+")

MAX_ANCHOR_TOKENS = 6


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int

    @property
    def norm(self) -> str:
        return self.text.lower()


def tokenize(text: str, offset: int = 0) -> list[Token]:
    return [Token(m.group(), m.start() + offset, m.end() + offset) for m in TOKEN_RE.finditer(text)]


def normalize(text: str) -> str:
    """Lowercase and collapse whitespace runs."""
    return " ".join(text.lower().split())


def anchor_key(text: str) -> str:
    """Dictionary key of an anchor: its lowercased token sequence joined by single spaces.

    Punctuation acts as a separator, so "Mercury (planet)" and "mercury planet"
    share a key. This is what makes keys comparable with token windows.
    """
    return " ".join(m.group().lower() for m in TOKEN_RE.finditer(text))


def strip_qualifier(title: str) -> str:
    """Drop a trailing parenthetical qualifier: "Mercury (planet)" -> "Mercury"."""
    return re.sub(r"\s*\([^()]*\)\s*$", "", title)
