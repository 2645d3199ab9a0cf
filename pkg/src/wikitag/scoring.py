"""In-link relatedness, votes, disambiguation scores and coherence."""
from __future__ import annotations

import math
from typing import Collection, Iterable, Sequence

from .kb import InLinkGraph, SenseCandidate


def relatedness(p_a: int, p_b: int, graph: InLinkGraph, *, distance: bool = False) -> float:
    """Normalized in-link distance turned into a similarity in [0, 1].

    With ``distance=True`` the raw distance is returned instead (clamped to
    [0, 1], 0 for identical pages, 1 when no overlap can be measured).
    """
    if p_a not in graph or p_b not in graph:
        missing = p_a if p_a not in graph else p_b
        raise KeyError(f"page {missing} not in link graph")
    if p_a == p_b:
        return 0.0 if distance else 1.0
    in_a, in_b = graph.in_set(p_a), graph.in_set(p_b)
    na, nb = len(in_a), len(in_b)
    if na == 0 or nb == 0:
        return 1.0 if distance else 0.0
    common = len(in_a & in_b) if na <= nb else len(in_b & in_a)
    # log of ratios rather than differences of logs: exact ratios (like 8/4
    # against 10/5) then give an exact distance instead of one ulp off
    denom = math.log(graph.W / min(na, nb))
    if common == 0 or denom <= 0:
        return 1.0 if distance else 0.0
    d = math.log(max(na, nb) / common) / denom
    if distance:
        return min(max(d, 0.0), 1.0)
    return min(max(1.0 - d, 0.0), 1.0)


class RelCache:
    """Bounded memo keyed by unordered page pair.

    Plain dict operations are atomic under the GIL; concurrent inserts of the
    same key store the same value, so races are benign.
    """

    def __init__(self, maxsize: int = 1_000_000):
        self.maxsize = maxsize
        self._data: dict[tuple[int, int], float] = {}

    def get(self, key: tuple[int, int]) -> float | None:
        return self._data.get(key)

    def put(self, key: tuple[int, int], value: float) -> None:
        if len(self._data) >= self.maxsize:
            try:
                del self._data[next(iter(self._data))]
            except (KeyError, StopIteration, RuntimeError):
                pass
        self._data[key] = value

    def __len__(self) -> int:
        return len(self._data)


class Relatedness:
    """Relatedness function bound to a graph, with a per-instance memo.

    ``computed`` counts actual formula evaluations (memo and cache misses),
    ``calls`` every request. A pipeline creates one per text.
    """

    def __init__(self, graph: InLinkGraph, cache: RelCache | None = None, *, distance: bool = False):
        self.graph = graph
        self.cache = cache
        self.distance = distance
        self._memo: dict[tuple[int, int], float] = {}
        self.calls = 0
        self.computed = 0

    def __call__(self, p: int, q: int) -> float:
        self.calls += 1
        key = (p, q) if p <= q else (q, p)
        v = self._memo.get(key)
        if v is not None:
            return v
        if self.cache is not None and not self.distance:
            v = self.cache.get(key)
        if v is None:
            v = relatedness(key[0], key[1], self.graph, distance=self.distance)
            self.computed += 1
            if self.cache is not None and not self.distance:
                self.cache.put(key, v)
        self._memo[key] = v
        return v


def vote(voter_senses: Sequence[SenseCandidate], p_a: int, rel) -> float:
    """Commonness-weighted relatedness of a voter's senses to ``p_a``, divided by |Pg(b)|."""
    if not voter_senses:
        return 0.0
    return sum(rel(s.page, p_a) * s.commonness for s in voter_senses) / len(voter_senses)


def total_score(p_a: int, voters: Iterable[Sequence[SenseCandidate]], rel) -> float:
    """Sum of the votes every other anchor gives to sense ``p_a``."""
    return sum(vote(senses, p_a, rel) for senses in voters)


def coherence(p_a: int, assigned: Collection[int], rel) -> float:
    """Average relatedness of ``p_a`` to the other distinct assigned senses.

    The normalizer is |S| - 1, so ``assigned`` is expected to contain ``p_a``.
    Returns 0 when there is no other sense.
    """
    others = sorted(p for p in set(assigned) if p != p_a)
    if not others:
        return 0.0
    size = len(set(assigned) | {p_a})
    return sum(rel(p, p_a) for p in others) / (size - 1)
