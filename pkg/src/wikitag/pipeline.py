"""End-to-end annotation: spot, disambiguate, score coherence, prune.

Short texts are annotated in one pass. Long texts reuse the same procedure
on a window of ``window_anchors`` mentions centred on each mention, and each
mention keeps the decision made in its own window.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .disambiguation import DisambConfig, SenseScore, filtered_senses, select_dt
from .kb import AnchorEntry, KnowledgeBase, SenseCandidate
from .pruning import PruneConfig, prune
from .scoring import RelCache, Relatedness, coherence
from .spotter import SpotMention, spot

SHORT, LONG = "short", "long"


@dataclass(frozen=True)
class Annotation:
    mention: SpotMention
    sense: int | None  # final decision, None is NA
    candidate: int | None  # disambiguation choice before pruning
    rel_score: float
    lp: float
    coherence: float | None = None
    rho: float | None = None

    @property
    def status(self) -> str:
        if self.sense is not None:
            return "linked"
        return "pruned" if self.candidate is not None else "undecided"


@dataclass(frozen=True)
class PipelineConfig:
    disamb: DisambConfig = field(default_factory=DisambConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)
    window_anchors: int = 10
    long_text_threshold: int = 11

    def __post_init__(self) -> None:
        if self.window_anchors < 2:
            raise ValueError("window_anchors must be at least 2")


class _TextScorer:
    """Per-text scoring state: relatedness memo plus a vote memo.

    A vote only depends on (voter anchor, candidate page), so windows that
    share voters reuse it instead of recomputing relatedness sums.
    """

    def __init__(self, kb: KnowledgeBase, cfg: PipelineConfig, rel: Relatedness):
        self.kb = kb
        self.cfg = cfg
        self.rel = rel
        self._senses: dict[str, tuple[SenseCandidate, ...]] = {}
        self._votes: dict[tuple[str, int], float] = {}

    def senses(self, entry: AnchorEntry) -> tuple[SenseCandidate, ...]:
        s = self._senses.get(entry.text)
        if s is None:
            s = self._senses[entry.text] = filtered_senses(entry, self.cfg.disamb.tau)
        return s

    def vote(self, voter: AnchorEntry, page: int) -> float:
        key = (voter.text, page)
        v = self._votes.get(key)
        if v is None:
            senses = self.senses(voter)
            rel = self.rel
            v = sum(rel(s.page, page) * s.commonness for s in senses) / len(senses) if senses else 0.0
            self._votes[key] = v
        return v

    def decide(self, mentions: Sequence[SpotMention]) -> dict[str, tuple[int | None, float, float | None]]:
        """anchor text -> (choice, rel_score, coherence) for one group of mentions."""
        anchors = {m.anchor.text: m.anchor for m in mentions}
        order = sorted(anchors)
        dcfg = self.cfg.disamb
        choices: dict[str, tuple[int | None, float]] = {}
        for text in order:
            entry = anchors[text]
            voters = [anchors[t] for t in order if t != text]
            scores = [SenseScore(s.page, s.commonness, sum(self.vote(b, s.page) for b in voters))
                      for s in self.senses(entry)]
            choice = select_dt(scores, dcfg.epsilon, n_anchors=len(order),
                               fallback=dcfg.single_anchor_fallback)
            if choice is None:
                score = max((s.rel_a for s in scores), default=0.0)
            else:
                score = next(s.rel_a for s in scores if s.page == choice)
            choices[text] = (choice, score)

        assigned = {c for c, _ in choices.values() if c is not None}
        return {
            text: (c, score, None if c is None else coherence(c, assigned, self.rel))
            for text, (c, score) in choices.items()
        }


def _annotation(m: SpotMention, decision: tuple[int | None, float, float | None]) -> Annotation:
    choice, score, coh = decision
    return Annotation(m, choice, choice, score, m.anchor.lp, coh)


def annotate_mentions(mentions: Sequence[SpotMention], kb: KnowledgeBase,
                      cfg: PipelineConfig = PipelineConfig(),
                      rel: Relatedness | None = None) -> list[Annotation]:
    scorer = _TextScorer(kb, cfg, rel or Relatedness(kb.graph))
    decisions = scorer.decide(mentions)
    return prune([_annotation(m, decisions[m.anchor.text]) for m in mentions], cfg.prune)


def window_bounds(i: int, n: int, w: int) -> tuple[int, int]:
    """Half-open range of the ``w`` mentions centred on mention ``i`` (w//2 before it)."""
    lo = i - w // 2
    hi = lo + w
    if lo < 0:
        return 0, min(w, n)
    if hi > n:
        return max(0, n - w), n
    return lo, hi


def annotate_windowed(mentions: Sequence[SpotMention], kb: KnowledgeBase,
                      cfg: PipelineConfig = PipelineConfig(),
                      rel: Relatedness | None = None) -> list[Annotation]:
    scorer = _TextScorer(kb, cfg, rel or Relatedness(kb.graph))
    windows: dict[tuple[int, int], dict] = {}
    out = []
    n = len(mentions)
    for i, m in enumerate(mentions):
        bounds = window_bounds(i, n, cfg.window_anchors)
        decisions = windows.get(bounds)
        if decisions is None:
            if len(windows) > 2:
                windows.clear()  # windows slide monotonically; old ones never recur
            decisions = windows[bounds] = scorer.decide(mentions[bounds[0]:bounds[1]])
        out.append(_annotation(m, decisions[m.anchor.text]))
    return prune(out, cfg.prune)


def _rel(kb: KnowledgeBase, rel: Relatedness | None, cache: RelCache | None) -> Relatedness:
    return rel if rel is not None else Relatedness(kb.graph, cache)


def annotate_short(text: str, kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(), *,
                   rel: Relatedness | None = None, cache: RelCache | None = None) -> list[Annotation]:
    return annotate_mentions(spot(text, kb), kb, cfg, _rel(kb, rel, cache))


def annotate_long(text: str, kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(), *,
                  rel: Relatedness | None = None, cache: RelCache | None = None) -> list[Annotation]:
    return annotate_windowed(spot(text, kb), kb, cfg, _rel(kb, rel, cache))


def annotate_auto(text: str, kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(), *,
                  rel: Relatedness | None = None,
                  cache: RelCache | None = None) -> tuple[list[Annotation], str]:
    """Short path up to ``long_text_threshold`` mentions, windowed beyond. Returns the path taken."""
    mentions = spot(text, kb)
    r = _rel(kb, rel, cache)
    if len(mentions) <= cfg.long_text_threshold:
        return annotate_mentions(mentions, kb, cfg, r), SHORT
    return annotate_windowed(mentions, kb, cfg, r), LONG


def _round(v: float | None) -> float | None:
    return None if v is None else round(v, 6)


def annotation_record(ann: Annotation, text: str, kb: KnowledgeBase) -> dict:
    start, end = ann.mention.char_span
    return {
        "spot": text[start:end],
        "start": start,
        "end": end,
        "id": ann.sense,
        "title": None if ann.sense is None else kb.title(ann.sense),
        "status": ann.status,
        "lp": _round(ann.lp),
        "coherence": _round(ann.coherence),
        "rho": _round(ann.rho),
        "rel_score": _round(ann.rel_score),
    }


def annotation_records(anns: Sequence[Annotation], text: str, kb: KnowledgeBase,
                       include_na: bool = True) -> list[dict]:
    return [annotation_record(a, text, kb) for a in anns if include_na or a.sense is not None]


def annotate_payload(text: str, kb: KnowledgeBase, cfg: PipelineConfig = PipelineConfig(),
                     include_na: bool = True, cache: RelCache | None = None) -> dict:
    """The structure shared by CLI output lines and the HTTP /tag response."""
    anns, path = annotate_auto(text, kb, cfg, cache=cache)
    return {"path": path, "annotations": annotation_records(anns, text, kb, include_na)}
