"""Anchor spotting over token windows and nested-overlap resolution."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from .kb import AnchorEntry, KnowledgeBase
from .text import Token, tokenize

__all__ = ["SpotMention", "tokenize", "find_candidates", "resolve_overlaps", "spot"]


@dataclass(frozen=True)
class SpotMention:
    anchor: AnchorEntry
    token_span: tuple[int, int]  # inclusive
    char_span: tuple[int, int]

    @property
    def n_tokens(self) -> int:
        return self.token_span[1] - self.token_span[0] + 1

    @property
    def lp(self) -> float:
        return self.anchor.lp

    def contains(self, other: "SpotMention") -> bool:
        (a, b), (c, d) = self.token_span, other.token_span
        return a <= c and d <= b and (a, b) != (c, d)


def find_candidates(tokens: Sequence[Token], kb: KnowledgeBase) -> list[SpotMention]:
    """Every 1..6-token window found in the dictionary, overlaps included."""
    norms = [t.norm for t in tokens]
    out = []
    for i in range(len(norms)):
        for end, key in kb.trie.matches_at(norms, i):
            out.append(SpotMention(kb.dictionary[key], (i, end - 1),
                                   (tokens[i].start, tokens[end - 1].end)))
    return out


def resolve_overlaps(mentions: Sequence[SpotMention]) -> list[SpotMention]:
    """Drop a mention nested in a surviving longer one only when its lp is strictly lower.

    Containers are visited longest first, so every container's own fate is
    settled before it is used to drop anything.
    """
    by_start: dict[int, list[int]] = defaultdict(list)
    for idx, m in enumerate(mentions):
        by_start[m.token_span[0]].append(idx)
    alive = [True] * len(mentions)
    order = sorted(range(len(mentions)),
                   key=lambda i: (-mentions[i].n_tokens, mentions[i].token_span[0]))
    for ci in order:
        if not alive[ci]:
            continue
        c = mentions[ci]
        for start in range(c.token_span[0], c.token_span[1] + 1):
            for mi in by_start.get(start, ()):
                m = mentions[mi]
                if alive[mi] and c.contains(m) and m.lp < c.lp:
                    alive[mi] = False
    kept = [m for m, ok in zip(mentions, alive) if ok]
    kept.sort(key=lambda m: (m.token_span[0], m.token_span[1]))
    return kept


def spot(text: str, kb: KnowledgeBase) -> list[SpotMention]:
    """Tokenize, look up, resolve overlaps: the mention set a text is annotated with."""
    return resolve_overlaps(find_candidates(tokenize(text), kb))
