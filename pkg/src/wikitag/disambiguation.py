"""Sense selection: the threshold rule (DT) and the most-common / random baselines."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .kb import AnchorEntry, KnowledgeBase, SenseCandidate
from .scoring import Relatedness, total_score
from .spotter import SpotMention

DEFAULT_TAU = 0.02
DEFAULT_EPSILON = 0.30


@dataclass(frozen=True)
class DisambConfig:
    tau: float = DEFAULT_TAU
    epsilon: float = DEFAULT_EPSILON
    single_anchor_fallback: bool = False
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("tau", "epsilon"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class SenseScore:
    page: int
    commonness: float
    rel_a: float = 0.0


def filtered_senses(entry: AnchorEntry, tau: float) -> tuple[SenseCandidate, ...]:
    return tuple(s for s in entry.senses if s.commonness >= tau)


def candidate_senses(entry: AnchorEntry, cfg: DisambConfig) -> list[SenseScore]:
    return [SenseScore(s.page, s.commonness) for s in filtered_senses(entry, cfg.tau)]


def voter_anchors(target: AnchorEntry, anchors: Iterable[AnchorEntry]) -> list[AnchorEntry]:
    """Distinct anchors other than ``target``, in a canonical order.

    Repeated occurrences of one anchor count once, and the fixed order makes
    every floating-point sum independent of input order.
    """
    seen = {a.text: a for a in anchors if a.text != target.text}
    return [seen[k] for k in sorted(seen)]


def score_senses(entry: AnchorEntry, voters: Sequence[AnchorEntry], rel, tau: float) -> list[SenseScore]:
    voter_senses = [filtered_senses(b, tau) for b in voters]
    return [SenseScore(s.page, s.commonness, total_score(s.page, voter_senses, rel))
            for s in filtered_senses(entry, tau)]


def _dt_key(s: SenseScore):
    return (s.commonness, s.rel_a, -s.page)


def select_dt(scores: Sequence[SenseScore], epsilon: float, *,
              n_anchors: int = 2, fallback: bool = False) -> int | None:
    """Among senses whose rel_a is within a factor (1 - epsilon) of the best, take the most common.

    Returns None (NA) when there are no candidates or every rel_a is zero;
    the single-anchor fallback then picks the most common sense instead.
    """
    if not scores:
        return None
    best = max(s.rel_a for s in scores)
    if best <= 0.0:
        if fallback and n_anchors == 1:
            return max(scores, key=_dt_key).page
        return None
    cut = (1.0 - epsilon) * best
    return max((s for s in scores if s.rel_a >= cut), key=_dt_key).page


def disambiguate_dt(mention: SpotMention, mentions: Sequence[SpotMention], kb: KnowledgeBase,
                    cfg: DisambConfig = DisambConfig(), rel: Relatedness | None = None) -> int | None:
    rel = rel or Relatedness(kb.graph)
    voters = voter_anchors(mention.anchor, (m.anchor for m in mentions))
    scores = score_senses(mention.anchor, voters, rel, cfg.tau)
    n_anchors = len(voters) + 1
    return select_dt(scores, cfg.epsilon, n_anchors=n_anchors, fallback=cfg.single_anchor_fallback)


def disambiguate_mc(entry: AnchorEntry) -> int:
    return min(entry.senses, key=lambda s: (-s.commonness, s.page)).page


def disambiguate_random(entry: AnchorEntry, rng: random.Random) -> int:
    return rng.choice(entry.senses).page
